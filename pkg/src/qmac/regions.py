"""Rate-region bounds for the bosonic thermal-loss MAC.

A :class:`RateRegion` stores one rate-sum bound per nonempty sender subset.
Subsets are encoded as bitmasks: bit ``k`` set means sender ``k`` (0-based)
belongs to the subset.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .circuit import MacScenario, mac_output_state
from .exceptions import ResourceError, ValidationError
from .gaussian import g, g_diff, von_neumann_entropy

MAX_SENDERS = 20

LABELS = ("coherent", "classical-outer", "ea-outer", "tmsv", "receiver")


def subset_mask(members: Iterable[int]) -> int:
    """Bitmask of 0-based sender indices."""
    mask = 0
    for k in members:
        if not 0 <= k < MAX_SENDERS:
            raise ValidationError(f"sender index {k} outside [0, {MAX_SENDERS})")
        mask |= 1 << k
    return mask


def mask_members(mask: int, s: int) -> list[int]:
    return [k for k in range(s) if mask >> k & 1]


def all_masks(s: int) -> range:
    return range(1, 1 << s)


@dataclass(frozen=True)
class RateRegion:
    """Polymatroid-style region ``{R >= 0 : sum_{k in J} R_k <= bounds[J]}``."""

    s: int
    bounds: dict[int, float]
    label: str = "receiver"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if set(self.bounds) != set(all_masks(self.s)):
            raise ValidationError(f"bounds must cover all {2**self.s - 1} nonempty subsets")
        if any(b < 0 or math.isnan(b) for b in self.bounds.values()):
            raise ValidationError("bounds must be nonnegative numbers")

    def bound(self, members: Iterable[int]) -> float:
        return self.bounds[subset_mask(members)]

    @property
    def singletons(self) -> NDArray[np.float64]:
        return np.array([self.bounds[1 << k] for k in range(self.s)])

    @property
    def sum_rate(self) -> float:
        return self.bounds[(1 << self.s) - 1]

    def contains(self, rates: Sequence[float], slack: float = 0.0) -> bool:
        r = np.asarray(rates, dtype=float)
        if r.shape != (self.s,):
            raise ValidationError(f"expected {self.s} rates, got shape {r.shape}")
        if np.any(r < -slack):
            return False
        return all(
            r[mask_members(m, self.s)].sum() <= b + slack for m, b in self.bounds.items()
        )

    def scaled(self, factor: float, label: str | None = None) -> "RateRegion":
        return RateRegion(
            self.s,
            {m: b * factor for m, b in self.bounds.items()},
            label or self.label,
            dict(self.metadata),
        )

    def quantum(self) -> "RateRegion":
        """Entanglement-assisted quantum rates: every bound halved."""
        return self.scaled(0.5)

    def ray_point(self, direction: Sequence[float]) -> NDArray[np.float64]:
        """Farthest point ``t * direction`` inside the region."""
        d = np.asarray(direction, dtype=float)
        if d.shape != (self.s,) or np.any(d < 0) or not np.any(d > 0):
            raise ValidationError("direction must be a nonnegative, nonzero vector")
        t = math.inf
        for m, b in self.bounds.items():
            w = d[mask_members(m, self.s)].sum()
            if w > 0:
                t = min(t, b / w)
        return t * d

    def equal_rate(self) -> float:
        """Largest ``R`` such that every sender can simultaneously send at ``R``."""
        return float(self.ray_point(np.ones(self.s))[0])

    def is_monotone(self, slack: float = 1e-10) -> bool:
        for m in all_masks(self.s):
            for k in range(self.s):
                sup = m | (1 << k)
                if self.bounds[m] > self.bounds[sup] + slack:
                    return False
        return True

    def within(self, other: "RateRegion", slack: float = 1e-9) -> bool:
        """Subset-wise bound comparison ``self[J] <= other[J] + slack``."""
        return all(self.bounds[m] <= other.bounds[m] + slack for m in self.bounds)


def _polymatroid_from_singletons(singletons: Sequence[float], full: float) -> dict[int, float]:
    s = len(singletons)
    bounds = {}
    for m in all_masks(s):
        tot = sum(singletons[k] for k in mask_members(m, s))
        bounds[m] = full if m == (1 << s) - 1 else min(tot, full)
    return bounds


def coherent_region(scn: MacScenario) -> RateRegion:
    """Coherent-state rates ``g(sum_J tau eta_i N_S,i + N_B) - g(N_B)``."""
    bounds = {}
    for m in all_masks(scn.s):
        sig = sum(scn.tau * scn.eta[k] * scn.n_s[k] for k in mask_members(m, scn.s))
        bounds[m] = g_diff(scn.n_b, sig)
    return RateRegion(scn.s, bounds, "coherent")


def classical_outer_region(scn: MacScenario) -> RateRegion:
    """Outer bound for unassisted communication.

    Singletons assume a receiver that undoes the beamsplitter array; the sum
    rate is the energetic bound, equal to the coherent-state sum rate.
    """
    single = [g_diff(scn.n_b, scn.tau * n) for n in scn.n_s]
    full = coherent_region(scn).sum_rate
    return RateRegion(scn.s, _polymatroid_from_singletons(single, full), "classical-outer")


def ea_capacity_single(n_s: float, tau: float, n_b: float) -> float:
    """Entanglement-assisted capacity (bits) of the thermal-loss channel.

    Evaluates ``g(N) + g(N') - g(A+) - g(A-)`` with ``N' = tau N + N_B``.
    Since ``A+ = N' - d`` and ``A- = N - d`` with
    ``d = 2 tau N (N + 1) / (P + D)``, ``P = N + N' + 1``, it is computed as
    two stable differences of ``g``.
    """
    if not (n_s >= 0 and 0 <= tau <= 1 and n_b >= 0):
        raise ValidationError(f"invalid channel parameters n_s={n_s}, tau={tau}, n_b={n_b}")
    nsp = tau * n_s + n_b
    p = n_s + nsp + 1.0
    q = 4.0 * tau * n_s * (n_s + 1.0)
    disc = math.sqrt(p * p - q)
    d = q / (2.0 * (p + disc))
    # d <= min(n_s, nsp) analytically; clip rounding
    d = min(d, n_s, nsp)
    return g_diff(n_s - d, d) + g_diff(nsp - d, d)


def ea_outer_region(scn: MacScenario) -> RateRegion:
    """Entanglement-assisted outer bound from single-sender reductions."""
    single = [ea_capacity_single(n, scn.tau, scn.n_b) for n in scn.n_s]
    mix = sum(e * n for e, n in zip(scn.eta, scn.n_s))
    full = ea_capacity_single(mix, scn.tau, scn.n_b)
    return RateRegion(scn.s, _polymatroid_from_singletons(single, full), "ea-outer")


def tmsv_region(scn: MacScenario, phases: Sequence[float] | None = None) -> RateRegion:
    """Region achieved by pairwise TMSV sources.

    Every bound is the conditional quantum mutual information
    ``I(A'[J]; B | A'[J^c])`` of the output state, from Gaussian entropies.
    """
    s = scn.s
    if s > MAX_SENDERS:
        raise ResourceError(f"2^{s} subset enumeration exceeds the {MAX_SENDERS}-sender limit")
    state = mac_output_state(scn, phases)
    cache: dict[tuple[int, ...], float] = {}

    def S(modes: Sequence[int]) -> float:
        key = tuple(sorted(modes))
        if not key:
            return 0.0
        if key not in cache:
            cache[key] = von_neumann_entropy(state, key)
        return cache[key]

    idlers = list(range(1, s + 1))
    raw = {}
    for m in all_masks(s):
        comp = [k + 1 for k in range(s) if not m >> k & 1]
        raw[m] = S(idlers) + S([0] + comp) - S([0] + idlers) - S(comp)
    # rounding can push a vanishing mutual information slightly negative
    bounds = {m: max(v, 0.0) for m, v in raw.items()}
    return RateRegion(s, bounds, "tmsv", {"min_raw_cmi": min(raw.values())})


def asymptotic_ratio(n_s: float, eta: float, n_b: float) -> float:
    """Low-brightness, low-transmissivity limit of ``C_E / C_coh``.

    ``log(1 / N_S) / (eta (1 + N_B) log(1 + 1/N_B))``; both logarithms share
    one base, so the value is base independent.
    """
    if not (n_s > 0 and 0 < eta <= 1 and n_b > 0):
        raise ValidationError("asymptotic ratio needs n_s > 0, 0 < eta <= 1, n_b > 0")
    return math.log(1.0 / n_s) / (eta * (1.0 + n_b) * math.log1p(1.0 / n_b))


def asymptotic_ratio_next_order(n_s: float, eta: float, n_b: float) -> float:
    """:func:`asymptotic_ratio` plus the ``1 / (eta (1 + N_B))`` correction.

    The correction comes from the ``log(1 + 1/N_B)`` term of the first-order
    expansion of ``C_E``, which dominates the error when ``N_B`` is small.
    """
    return asymptotic_ratio(n_s, eta, n_b) + 1.0 / (eta * (1.0 + n_b))


def exact_ratio(n_s: float, eta: float, tau: float, n_b: float) -> float:
    """``C_E(N_S) / C_coh`` for one sender with weight ``eta``."""
    return ea_capacity_single(n_s, tau, n_b) / g_diff(n_b, tau * eta * n_s)


@dataclass(frozen=True)
class RegionGeometry:
    """Vertices of a region (2D: counterclockwise; 3D: with triangle facets)."""

    vertices: NDArray[np.float64]
    facets: NDArray[np.int64] | None = None


def region_vertices(region: RateRegion) -> NDArray[np.float64]:
    """All vertices of the region, by brute-force hyperplane intersection."""
    s = region.s
    rows, rhs = [], []
    for m, b in region.bounds.items():
        rows.append([1.0 if m >> k & 1 else 0.0 for k in range(s)])
        rhs.append(b)
    for k in range(s):
        e = np.zeros(s)
        e[k] = -1.0
        rows.append(list(e))
        rhs.append(0.0)
    a = np.array(rows)
    b = np.array(rhs)
    scale = max(1.0, float(np.max(np.abs(b))))
    tol = 1e-12 * scale
    pts: list[NDArray[np.float64]] = []
    for combo in itertools.combinations(range(len(b)), s):
        sub = a[list(combo)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, b[list(combo)])
        if np.all(a @ x <= b + tol):
            x = np.where(np.abs(x) < tol, 0.0, x)
            # snap axis intercepts onto the singleton bounds they came from
            sing = region.singletons
            x = np.where(np.abs(x - sing) <= tol, sing, x)
            if not any(np.allclose(x, p, rtol=0, atol=tol) for p in pts):
                pts.append(x)
    return np.array(pts)


def region_geometry(
    region: RateRegion, dims: int, scale: Sequence[float] | None = None
) -> RegionGeometry:
    """Boundary geometry for plotting, optionally dividing axis ``k`` by ``scale[k]``."""
    if dims not in (2, 3) or region.s != dims:
        raise ValidationError(f"region has {region.s} senders, cannot draw in {dims}D")
    v = region_vertices(region)
    if scale is not None:
        sc = np.asarray(scale, dtype=float)
        if sc.shape != (dims,) or np.any(sc <= 0):
            raise ValidationError("scale must hold one positive number per axis")
        v = v / sc
    if dims == 2:
        c = v.mean(axis=0)
        ang = np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0])
        # start the polygon at the origin
        order = np.argsort(ang)
        v = v[order]
        start = int(np.argmin(np.linalg.norm(v, axis=1)))
        return RegionGeometry(np.roll(v, -start, axis=0))
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(v)
    except QhullError:
        return RegionGeometry(v, None)
    return RegionGeometry(v, hull.simplices.astype(np.int64))
