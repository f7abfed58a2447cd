"""Exact Hamiltonian spectra and their gap / energy-sum combinatorics.

A spectrum is a sorted list of distinct rational energies, each carrying a
positive degeneracy.  From it we build two value-indexed families over
ordered pairs of level indices: the gap structure (pairs grouped by energy
difference) and the sum structure (pairs grouped by energy sum).  Grouping
is exact rational arithmetic throughout; equality of gap or sum values is
never decided by a floating-point tolerance, because the downstream
time-averaging identities require exact value collisions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, NamedTuple

__all__ = [
    "SpectrumError",
    "Spectrum",
    "GapStructure",
    "SumStructure",
    "Classification",
    "parse_spectrum",
    "gap_structure",
    "sum_structure",
    "classify",
    "nonresonance_sum_check",
    "structure_report",
]


class SpectrumError(ValueError):
    """Malformed or inconsistent spectrum input."""


@dataclass(frozen=True)
class Spectrum:
    """Distinct energy levels in ascending order with their degeneracies.

    ``levels`` is a tuple of ``(energy, degeneracy)`` pairs; energies are
    exact :class:`~fractions.Fraction` values (dimensionless, hbar = 1).
    ``approximate`` marks spectra whose energies were snapped from floats.
    """

    levels: tuple[tuple[Fraction, int], ...]
    approximate: bool = False

    def __post_init__(self):
        if not self.levels:
            raise SpectrumError("spectrum must contain at least one level")
        canonical = tuple(
            sorted((Fraction(e), int(d)) for e, d in self.levels)
        )
        object.__setattr__(self, "levels", canonical)
        seen: set[Fraction] = set()
        for energy, deg in canonical:
            if deg < 1:
                raise SpectrumError(
                    f"non-positive degeneracy {deg} for energy {energy}"
                )
            if energy in seen:
                raise SpectrumError(f"duplicate energy value {energy}")
            seen.add(energy)

    @property
    def energies(self) -> tuple[Fraction, ...]:
        return tuple(e for e, _ in self.levels)

    @property
    def degeneracies(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.levels)

    @property
    def num_levels(self) -> int:
        """Number of distinct eigenvalues."""
        return len(self.levels)

    @property
    def dim_total(self) -> int:
        """Full Hilbert-space dimension (degeneracies included)."""
        return sum(d for _, d in self.levels)

    @property
    def is_integer(self) -> bool:
        return all(e.denominator == 1 for e, _ in self.levels)

    @property
    def spread(self) -> Fraction:
        """Largest minus smallest energy."""
        return self.levels[-1][0] - self.levels[0][0]


@dataclass
class GapStructure:
    """Ordered level pairs ``(a, b)`` grouped by the exact gap ``E_b - E_a``.

    Indices are 0-based.  The zero gap collects the diagonal pairs, one per
    level; negative gaps are kept as their own entries (the pair ``(a, b)``
    sits in the gap opposite to ``(b, a)``).
    """

    spec: Spectrum
    entries: dict[Fraction, tuple[tuple[int, int], ...]]

    def degeneracy(self, value) -> int:
        return len(self.entries.get(Fraction(value), ()))

    @property
    def max_gap_degeneracy(self) -> int:
        """Largest pair count among nonzero gaps; 0 for a single level."""
        return max(
            (len(p) for v, p in self.entries.items() if v != 0), default=0
        )


@dataclass
class SumStructure:
    """Ordered level pairs ``(a, c)`` grouped by the exact sum ``E_a + E_c``.

    Diagonal pairs ``(a, a)`` are included; every ordered pair appears in
    exactly one entry, and entries are closed under pair swap.
    """

    spec: Spectrum
    entries: dict[Fraction, tuple[tuple[int, int], ...]]

    def degeneracy(self, value) -> int:
        return len(self.entries.get(Fraction(value), ()))

    @property
    def max_sum_degeneracy(self) -> int:
        return max(len(p) for p in self.entries.values())


class Classification(NamedTuple):
    non_degenerate: bool
    non_resonant: bool


def _as_fraction(value: Any, snap_denominator: int | None) -> tuple[Fraction, bool]:
    """Convert a schema energy value to an exact Fraction.

    Returns (fraction, snapped).  Floats are only admitted when a snapping
    denominator is supplied, since exact gap/sum collisions are meaningless
    on raw floating-point input.
    """
    if isinstance(value, bool):
        raise SpectrumError(f"malformed energy value {value!r}")
    if isinstance(value, int):
        return Fraction(value), False
    if isinstance(value, str):
        try:
            return Fraction(value), False
        except (ValueError, ZeroDivisionError) as exc:
            raise SpectrumError(f"malformed energy value {value!r}") from exc
    if isinstance(value, float):
        if snap_denominator is None:
            raise SpectrumError(
                f"float energy {value!r} requires an explicit snap denominator"
            )
        q = int(snap_denominator)
        if q < 1:
            raise SpectrumError(f"snap denominator must be positive, got {q}")
        return Fraction(round(value * q), q), True
    raise SpectrumError(f"malformed energy value {value!r}")


def parse_spectrum(document, snap_denominator: int | None = None) -> Spectrum:
    """Parse the spectrum schema into a canonical :class:`Spectrum`.

    ``document`` is either a JSON string or an already-decoded mapping of
    the form ``{"levels": [{"energy": <int or "p/q">, "degeneracy": n}]}``.
    Exact rationals are preserved without rounding.  Float energies are
    rejected unless ``snap_denominator`` is given, in which case they are
    snapped to the nearest multiple of ``1/snap_denominator`` and the
    resulting spectrum is flagged ``approximate``.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpectrumError(f"invalid spectrum document: {exc}") from exc
    if not isinstance(document, dict) or "levels" not in document:
        raise SpectrumError('spectrum document must contain a "levels" list')
    raw_levels = document["levels"]
    if not isinstance(raw_levels, list) or not raw_levels:
        raise SpectrumError('"levels" must be a non-empty list')

    levels = []
    snapped_any = False
    for i, entry in enumerate(raw_levels):
        if not isinstance(entry, dict) or "energy" not in entry or "degeneracy" not in entry:
            raise SpectrumError(
                f'level {i} must be an object with "energy" and "degeneracy"'
            )
        energy, snapped = _as_fraction(entry["energy"], snap_denominator)
        snapped_any = snapped_any or snapped
        deg = entry["degeneracy"]
        if isinstance(deg, bool) or not isinstance(deg, int) or deg < 1:
            raise SpectrumError(
                f"level {i}: degeneracy must be a positive integer, got {deg!r}"
            )
        levels.append((energy, deg))

    values = [e for e, _ in levels]
    dupes = sorted({v for v in values if values.count(v) > 1})
    if dupes:
        raise SpectrumError(
            "duplicate energy values: " + ", ".join(str(v) for v in dupes)
        )
    return Spectrum(tuple(levels), approximate=snapped_any)


def gap_structure(spec: Spectrum) -> GapStructure:
    """Group all ordered level pairs by their exact energy difference."""
    energies = spec.energies
    groups: dict[Fraction, list[tuple[int, int]]] = {}
    for a in range(spec.num_levels):
        for b in range(spec.num_levels):
            groups.setdefault(energies[b] - energies[a], []).append((a, b))
    entries = {
        value: tuple(sorted(groups[value])) for value in sorted(groups)
    }
    return GapStructure(spec=spec, entries=entries)


def sum_structure(spec: Spectrum) -> SumStructure:
    """Group all ordered level pairs by their exact energy sum."""
    energies = spec.energies
    groups: dict[Fraction, list[tuple[int, int]]] = {}
    for a in range(spec.num_levels):
        for c in range(spec.num_levels):
            groups.setdefault(energies[a] + energies[c], []).append((a, c))
    entries = {
        value: tuple(sorted(groups[value])) for value in sorted(groups)
    }
    return SumStructure(spec=spec, entries=entries)


def classify(spec: Spectrum) -> Classification:
    """Non-degenerate: every level simple.  Non-resonant: every nonzero gap unique."""
    non_degenerate = all(d == 1 for d in spec.degeneracies)
    non_resonant = gap_structure(spec).max_gap_degeneracy <= 1
    return Classification(non_degenerate, non_resonant)


def nonresonance_sum_check(spec: Spectrum) -> str:
    """Check that a non-resonant spectrum has maximal sum degeneracy two.

    Returns "holds" when the spectrum is non-resonant and the maximal sum
    degeneracy equals 2, "vacuous" when the spectrum is resonant (the
    implication says nothing), "violated" if a non-resonant spectrum ever
    produced a different sum degeneracy, and "inapplicable" for fewer than
    two levels.  Note the literal claim is about the maximum: sum values
    reachable only as twice a level energy have a single pair.
    """
    if spec.num_levels < 2:
        return "inapplicable"
    if not classify(spec).non_resonant:
        return "vacuous"
    return "holds" if sum_structure(spec).max_sum_degeneracy == 2 else "violated"


def structure_report(spec: Spectrum) -> dict:
    """Canonical analysis record for a spectrum.

    Pair indices in the report are 1-based, matching the level numbering
    convention used everywhere in user-facing output.
    """
    gaps = gap_structure(spec)
    sums = sum_structure(spec)
    cls = classify(spec)
    return {
        "D": spec.dim_total,
        "D_E": spec.num_levels,
        "D_G": gaps.max_gap_degeneracy,
        "D_F": sums.max_sum_degeneracy,
        "non_degenerate": cls.non_degenerate,
        "non_resonant": cls.non_resonant,
        "approximate": spec.approximate,
        "levels": [
            {"energy": str(e), "degeneracy": d} for e, d in spec.levels
        ],
        "gaps": [
            {
                "value": str(value),
                "count": len(pairs),
                "pairs": [[a + 1, b + 1] for a, b in pairs],
            }
            for value, pairs in gaps.entries.items()
        ],
        "sums": [
            {
                "value": str(value),
                "count": len(pairs),
                "pairs": [[a + 1, b + 1] for a, b in pairs],
            }
            for value, pairs in sums.entries.items()
        ],
    }
