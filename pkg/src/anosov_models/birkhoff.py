"""Integer combinatorics of a Birkhoff section near one boundary orbit.

A boundary orbit carries the triple (p, n, m): p boundary components, linking
number n and signed multiplicity m.  Near the orbit the section is cut into
4n quadrants, and the first return map permutes them by a fixed shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import DataError, NotApplicableError, ParameterDomainError


@dataclass(frozen=True)
class BirkhoffBoundaryData:
    p: int
    n: int
    m: int

    @property
    def embedded(self) -> bool:
        """The section is embedded near the orbit iff |m| = 1."""
        return abs(self.m) == 1

    def to_dict(self) -> dict:
        return {"p": self.p, "n": self.n, "m": self.m}


@dataclass(frozen=True)
class Validation:
    ok: bool
    violations: tuple[str, ...]
    embedded: bool


def validate(data: BirkhoffBoundaryData) -> Validation:
    problems = []
    if int(data.p) != data.p or data.p < 1:
        problems.append(f"p={data.p} must be a positive integer")
    if int(data.n) != data.n or data.n < 1:
        problems.append(f"n={data.n} must be a positive integer")
    if int(data.m) != data.m or data.m == 0:
        problems.append(f"m={data.m} must be a nonzero integer")
    elif data.n >= 1 and math.gcd(int(data.n), abs(int(data.m))) != 1:
        problems.append(f"gcd(n, |m|) = {math.gcd(int(data.n), abs(int(data.m)))} must be 1")
    return Validation(not problems, tuple(problems), data.embedded)


def _require_coprime(n: int, m: int) -> None:
    if n < 1 or m == 0 or math.gcd(n, abs(m)) != 1:
        raise ParameterDomainError(f"need n >= 1, m != 0 and gcd(n, |m|) = 1 (got n={n}, m={m})")


def inverse_mod(m: int, n: int) -> int:
    """The representative of m^-1 mod n in [1, n-1]; zero when n = 1."""
    if n == 1:
        return 0
    return pow(m, -1, n)


@dataclass(frozen=True)
class QuadrantPermutation:
    """Action of the first return map on the quadrants B_0, ..., B_{4n-1}."""

    n: int
    m: int
    inverse: int
    shift: int

    @property
    def size(self) -> int:
        return 4 * self.n

    def __call__(self, j: int) -> int:
        return (j + self.shift) % self.size

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(self(j) for j in range(self.size))

    def power(self, k: int) -> "QuadrantPermutation":
        return QuadrantPermutation(self.n, self.m, self.inverse, (k * self.shift) % self.size)

    def order(self) -> int:
        images = self.as_tuple()
        identity = tuple(range(self.size))
        current, k = images, 1
        while current != identity:
            current = tuple(images[j] for j in current)
            k += 1
        return k

    def preserves_residues(self) -> bool:
        return all(self(j) % 4 == j % 4 for j in range(self.size))

    def cycles(self) -> list[list[int]]:
        seen, out = set(), []
        for j in range(self.size):
            if j in seen:
                continue
            cycle, k = [], j
            while k not in seen:
                seen.add(k)
                cycle.append(k)
                k = self(k)
            out.append(cycle)
        return out


def quadrant_permutation(n: int, m: int) -> QuadrantPermutation:
    """j -> j + 4l for m > 0 and j -> j - 4l for m < 0, with l = m^-1 mod n."""
    _require_coprime(n, m)
    inv = inverse_mod(m, n)
    step = 4 * inv if m > 0 else -4 * inv
    return QuadrantPermutation(n, m, inv, step % (4 * n))


def kth_power_shift(n: int, m: int) -> int:
    """The k in [1, n-1] with k = m mod n; P^k moves every quadrant by 4 (or -4)."""
    _require_coprime(n, m)
    if n == 1:
        raise NotApplicableError("with n = 1 every quadrant is already fixed by the return map")
    return m % n


def holonomy_defect(n: int, m: int) -> int:
    """Exponent of the return map relating the two projections across the cut."""
    _require_coprime(n, m)
    return m


def compose_defects(defects: Sequence[int]) -> int:
    return sum(defects)


def homological_intersection(curve_class: tuple[int, int], n: int, m: int) -> int:
    """Intersection of a curve of class (p_coeff, q_coeff) with the section."""
    p_coeff, q_coeff = curve_class
    return -p_coeff * m + q_coeff * n


def blowdown_bookkeeping(data: Sequence[BirkhoffBoundaryData]) -> list[dict]:
    rows = []
    for d in data:
        prongs = 2 * d.n
        rows.append(
            {
                "p": d.p,
                "n": d.n,
                "m": d.m,
                "period": d.p,
                "prongs": prongs,
                "singular": prongs >= 3,
            }
        )
    return rows


class Verdict(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TheoremBResult:
    verdict: Verdict
    mismatches: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "mismatches": list(self.mismatches)}


def theorem_b_check(
    data1: Sequence[BirkhoffBoundaryData],
    data2: Sequence[BirkhoffBoundaryData],
    conjugacy_token: bool,
    correspondence: Sequence[int] | None = None,
) -> TheoremBResult:
    """Compare boundary data of two sections under an orbit correspondence.

    ``correspondence[i]`` is the index in ``data2`` matched with orbit i of
    ``data1`` (identity by default).  The fundamental-group hypothesis is not
    decided here; it enters as ``conjugacy_token``.
    """
    if len(data1) != len(data2):
        raise DataError(f"orbit counts differ: {len(data1)} vs {len(data2)}")
    if correspondence is None:
        correspondence = list(range(len(data1)))
    if sorted(correspondence) != list(range(len(data2))):
        raise DataError("the orbit correspondence must be a bijection")
    if not conjugacy_token:
        return TheoremBResult(Verdict.INCONCLUSIVE, ())
    mismatches = tuple(
        i for i, j in enumerate(correspondence)
        if (data1[i].p, data1[i].n, data1[i].m) != (data2[j].p, data2[j].n, data2[j].m)
    )
    return TheoremBResult(Verdict.NEGATIVE if mismatches else Verdict.POSITIVE, mismatches)


def saddle_band_invariant(mu_p: float, mu_q: float) -> float:
    """log(mu_q) / log(mu_p); equal values are necessary for conjugate bands."""
    if not (mu_p > 1.0 and mu_q > 1.0):
        raise ParameterDomainError(f"eigenvalues must exceed 1 (got {mu_p}, {mu_q})")
    return math.log(mu_q) / math.log(mu_p)


def bands_compatible(
    pair1: tuple[float, float], pair2: tuple[float, float], tolerance: float = 1e-12
) -> bool:
    return abs(saddle_band_invariant(*pair1) - saddle_band_invariant(*pair2)) <= tolerance


def coprime_pairs(n_max: int, m_max: int) -> list[tuple[int, int]]:
    """All (n, m) with 1 <= n <= n_max, 0 < |m| <= m_max and gcd(n, |m|) = 1."""
    return [
        (n, m)
        for n in range(1, n_max + 1)
        for m in range(-m_max, m_max + 1)
        if m != 0 and math.gcd(n, abs(m)) == 1
    ]


def combinatorics_row(n: int, m: int, p: int = 1) -> dict:
    perm = quadrant_permutation(n, m)
    return {
        "n": n,
        "m": m,
        "p": p,
        "l": perm.inverse,
        "shift": perm.shift,
        "order": perm.order(),
        "permutation": " ".join(str(j) for j in perm.as_tuple()),
        "identity": perm.as_tuple() == tuple(range(perm.size)),
        "k": kth_power_shift(n, m) if n > 1 else None,
        "holonomy_defect": holonomy_defect(n, m),
        "meridian_intersection": homological_intersection((1, 0), n, m),
        "longitude_intersection": homological_intersection((0, 1), n, m),
        "prongs": 2 * n,
        "singular": n >= 2,
        "embedded": abs(m) == 1,
    }
