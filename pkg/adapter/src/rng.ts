/**
 * 32-bit linear congruential generator (numerical-recipes constants).
 *
 * All intermediate products stay below 2^53, so every draw is exact in
 * IEEE-754 doubles and matches any integer implementation bit for bit.
 */

const M32 = 4294967296; // 2^32
const A = 1664525;
const C = 1013904223;

export class Lcg {
  state: number;

  constructor(seed: number) {
    this.state = ((seed % M32) + M32) % M32;
  }

  next(): number {
    this.state = (A * this.state + C) % M32;
    return this.state;
  }

  rand(n: number): number {
    return this.next() % n;
  }
}
