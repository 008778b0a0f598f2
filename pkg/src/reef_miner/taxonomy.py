"""Canonical genus taxonomy, loaded from the bundled data file."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


class TaxonomyError(RuntimeError):
    """Bundled taxonomy file is missing or malformed."""


def _data_text(name: str) -> str:
    try:
        return resources.files("reef_miner.data").joinpath(name).read_text(encoding="utf-8")
    except (FileNotFoundError, ModuleNotFoundError) as exc:
        raise TaxonomyError(f"bundled data file {name!r} not found") from exc


@lru_cache(maxsize=1)
def canonical_taxonomy() -> tuple[str, ...]:
    """All recognized genus names (plus the catch-all "Hybrid"), sorted.

    Raises TaxonomyError when the bundled list is corrupt (empty lines,
    duplicates, or not lexicographically sorted).
    """
    names = [line.strip() for line in _data_text("taxonomy.txt").splitlines()]
    if not names or any(not n for n in names):
        raise TaxonomyError("taxonomy file contains empty entries")
    if len(set(names)) != len(names):
        raise TaxonomyError("taxonomy file contains duplicate entries")
    if names != sorted(names):
        raise TaxonomyError("taxonomy file is not sorted")
    return tuple(names)


def is_known_genus(name: str) -> bool:
    return name in set(canonical_taxonomy())
