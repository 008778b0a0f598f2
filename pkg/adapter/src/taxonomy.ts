/**
 * Canonical genus list (43 named genera plus "Hybrid"), lexicographically
 * sorted. Must stay identical to the pipeline's bundled taxonomy file:
 * the dummy classifier indexes into it by position.
 */

export const TAXONOMY: readonly string[] = [
  "Acanthastrea",
  "Acropora",
  "Alveopora",
  "Astreopora",
  "Cantharellus",
  "Colpophyllia",
  "Coscinaraea",
  "Cynarina",
  "Cyphastrea",
  "Diploastrea",
  "Echinophyllia",
  "Echinopora",
  "Euphyllia",
  "Favia",
  "Favites",
  "Fungia",
  "Galaxea",
  "Goniastrea",
  "Goniopora",
  "Heliofungia",
  "Herpolitha",
  "Hybrid",
  "Hydnophora",
  "Isopora",
  "Leptastrea",
  "Leptoria",
  "Leptoseris",
  "Lobophyllia",
  "Meandrina",
  "Merulina",
  "Montipora",
  "Pachyseris",
  "Pavona",
  "Pectinia",
  "Platygyra",
  "Pocillopora",
  "Porites",
  "Psammocora",
  "Seriatopora",
  "Siderastrea",
  "Stylophora",
  "Symphyllia",
  "Trachyphyllia",
  "Turbinaria",
];
