"""Shared generators and independent brute-force oracles for the test suite.

The oracles here deliberately use different algorithms from the package
(quadruple loops and pairwise counting instead of value grouping) so that
agreement is evidence, not tautology.
"""

from fractions import Fraction

import numpy as np

from ergolab import (
    Spectrum,
    prepare_state,
    sample_decomposition,
    sample_random_state,
)


def brute_max_gap_degeneracy(energies) -> int:
    """Largest number of ordered pairs sharing a nonzero difference, by counting."""
    n = len(energies)
    best = 0
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            value = energies[b] - energies[a]
            count = sum(
                1
                for c in range(n)
                for d in range(n)
                if energies[d] - energies[c] == value
            )
            best = max(best, count)
    return best


def brute_max_sum_degeneracy(energies) -> int:
    """Largest number of ordered pairs sharing a sum, by counting."""
    n = len(energies)
    best = 0
    for a in range(n):
        for b in range(n):
            value = energies[a] + energies[b]
            count = sum(
                1
                for c in range(n)
                for d in range(n)
                if energies[c] + energies[d] == value
            )
            best = max(best, count)
    return best


def brute_resonant_cross_terms(s: np.ndarray, energies) -> float:
    """Quadruple-loop evaluation of the resonance cross terms.

    Sums s[a, b] * s[sig, g] over all index quadruples whose energy sums
    collide (E_a + E_sig == E_b + E_g) except (b, g) equal to (a, sig) or
    its swap.  No sum classes are formed; this is the defining sum.
    """
    n = len(energies)
    acc = 0.0 + 0.0j
    for a in range(n):
        for sig in range(n):
            for b in range(n):
                for g in range(n):
                    if energies[a] + energies[sig] != energies[b] + energies[g]:
                        continue
                    if (b, g) == (a, sig) or (b, g) == (sig, a):
                        continue
                    acc += s[a, b] * s[sig, g]
    assert abs(acc.imag) < 1e-10
    return float(acc.real)


def random_composition(rng: np.random.Generator, total: int, parts: int) -> list[int]:
    """Uniform composition of ``total`` into ``parts`` positive integers."""
    if parts == 1:
        return [total]
    cuts = np.sort(rng.choice(total - 1, size=parts - 1, replace=False)) + 1
    bounds = np.concatenate([[0], cuts, [total]])
    return list(np.diff(bounds).astype(int))


def random_integer_spectrum(
    rng: np.random.Generator,
    dim_range: tuple[int, int] = (4, 12),
    spread: int = 12,
) -> Spectrum:
    """Random integer spectrum with bounded total dimension and energy spread."""
    dim = int(rng.integers(dim_range[0], dim_range[1] + 1))
    num_levels = int(rng.integers(2, min(dim, spread + 1) + 1))
    energies = np.sort(rng.choice(spread + 1, size=num_levels, replace=False))
    degens = random_composition(rng, dim, num_levels)
    return Spectrum(tuple((Fraction(int(e)), d) for e, d in zip(energies, degens)))


def random_nonresonant_levels(rng: np.random.Generator, num_levels: int) -> list[int]:
    """Distinct integers whose nonzero pairwise differences are all distinct."""
    span = 8 * num_levels**3 + 16
    while True:
        values = np.sort(rng.choice(span, size=num_levels, replace=False))
        diffs = {int(b - a) for i, a in enumerate(values) for b in values[i + 1:]}
        if len(diffs) == num_levels * (num_levels - 1) // 2:
            return [int(v) for v in values]


def greedy_nonresonant_levels(count: int) -> list[int]:
    """Deterministic integer levels with all pairwise sums (hence gaps) distinct."""
    levels = [0]
    sums = {0}
    x = 0
    while len(levels) < count:
        x += 1
        new = {x + a for a in levels} | {2 * x}
        if not (new & sums):
            sums |= new
            levels.append(x)
    return levels


def random_instance(spec: Spectrum, rng: np.random.Generator, max_cells: int = 4):
    """Random prepared state plus random decomposition for a spectrum."""
    dim = spec.dim_total
    parts = int(rng.integers(1, min(max_cells, dim) + 1))
    dims = random_composition(rng, dim, parts)
    decomposition = sample_decomposition(dims, rng)
    state = prepare_state(sample_random_state(dim, rng), spec)
    return state, decomposition
