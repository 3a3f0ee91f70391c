"""Photodetection statistics and Shannon mutual information for BPSK receivers.

Two-mode count distributions are parameterised by quadrature-unit constants
``E = 2 n1 + 1``, ``S = 2 n2 + 1`` and cross term ``C = 2 |c|``, where ``c`` is
either ``<a1 a2^dag>`` or ``<a1 a2>`` (the count distribution only depends on
``|c|``). The probability generating function is

    G(u, v) = 1 / (A0 + A1 u + A2 v + A12 u v)

with ``A0 = (1 + n1)(1 + n2) - c^2``, ``A1 = c^2 - n1 (1 + n2)``,
``A2 = c^2 - n2 (1 + n1)`` and ``A12 = n1 n2 - c^2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve
from scipy.signal import lfilter
from scipy.special import gammaln, logsumexp, roots_hermite, xlogy

from .exceptions import PhysicalityError, ResourceError, ValidationError
from .gaussian import LN2, GaussianState

PER_ARM_TAIL = 2.5e-11
MAX_GRID_CELLS = 2**24
CLIP_TOL = 1e-14
NEGATIVE_TOL = 1e-10
EDGE_SIGMAS = 8.0
_PHYS_TOL = 1e-12


@dataclass(frozen=True)
class JointCountDistribution:
    """Probabilities on the window ``offset + [0, shape)`` of count space.

    Attributes
    ----------
    probs : ndarray
        ``probs[i, j] = P(offset[0] + i, offset[1] + j)``; any dimensionality.
    offset : tuple of int
        Lowest count represented on each axis.
    mass_deficit : float
        Probability mass dropped by truncation (before renormalisation).
    message : tuple of int, optional
        Message bits this distribution is conditioned on.
    """

    probs: NDArray[np.float64]
    offset: tuple[int, ...] = ()
    mass_deficit: float = 0.0
    message: tuple[int, ...] | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        off = tuple(int(o) for o in self.offset) or (0,) * p.ndim
        if len(off) != p.ndim:
            raise ValidationError("offset must have one entry per axis")
        if np.any(p < 0):
            raise ValidationError("probabilities must be nonnegative")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "offset", off)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def axis_values(self, axis: int) -> NDArray[np.float64]:
        return self.offset[axis] + np.arange(self.probs.shape[axis], dtype=float)

    def mean(self) -> NDArray[np.float64]:
        p = self.probs / self.total
        return np.array(
            [np.sum(_marginal(p, k) * self.axis_values(k)) for k in range(p.ndim)]
        )

    def cov(self) -> NDArray[np.float64]:
        p = self.probs / self.total
        mu = self.mean()
        grids = np.meshgrid(
            *[self.axis_values(k) - mu[k] for k in range(p.ndim)], indexing="ij"
        )
        return np.array([[np.sum(p * gi * gj) for gj in grids] for gi in grids])

    def marginal(self, axis: int) -> NDArray[np.float64]:
        return _marginal(self.probs, axis)


def _marginal(p: NDArray[np.float64], axis: int) -> NDArray[np.float64]:
    others = tuple(k for k in range(p.ndim) if k != axis)
    return p.sum(axis=others)


def _pgf_coefficients(n1: float, n2: float, c2: float) -> tuple[float, float, float, float]:
    a0 = (1.0 + n1) * (1.0 + n2) - c2
    a1 = c2 - n1 * (1.0 + n2)
    a2 = c2 - n2 * (1.0 + n1)
    a12 = n1 * n2 - c2
    return a0, a1, a2, a12


def _geometric_size(n: float, tail: float) -> int:
    """Smallest ``K`` with ``P(N >= K) <= tail`` for a thermal marginal."""
    if n <= 0:
        return 1
    return int(math.ceil(math.log(tail) / math.log(n / (1.0 + n)))) + 1


def _check_params(e: float, s: float, c: float) -> tuple[float, float, float]:
    if not (np.isfinite(e) and np.isfinite(s) and np.isfinite(c)):
        raise ValidationError("E, S, C must be finite")
    n1, n2 = (e - 1.0) / 2.0, (s - 1.0) / 2.0
    scale = max(1.0, e, s)
    if n1 < -_PHYS_TOL * scale or n2 < -_PHYS_TOL * scale:
        raise PhysicalityError(f"variances E={e}, S={s} below vacuum level")
    n1, n2 = max(n1, 0.0), max(n2, 0.0)
    c2 = (c / 2.0) ** 2
    limit = min(n1 * (1.0 + n2), n2 * (1.0 + n1))
    if c2 > limit + _PHYS_TOL * scale * scale:
        raise PhysicalityError(
            f"cross term C={c} too large for E={e}, S={s} (|c|^2 {c2:.6g} > {limit:.6g})"
        )
    return n1, n2, min(c2, limit)


def _recurrence(n1: float, n2: float, c2: float, k1: int, k2: int) -> NDArray[np.float64]:
    a0, a1, a2, a12 = _pgf_coefficients(n1, n2, c2)
    p = np.zeros((k1, k2))
    rhs = np.zeros(k2)
    rhs[0] = 1.0
    for i in range(k1):
        if i > 0:
            rhs = -a1 * p[i - 1]
            rhs[1:] -= a12 * p[i - 1, :-1]
        p[i] = lfilter([1.0 / a0], [1.0, a2 / a0], rhs)
    return p


def _log_pow(x: float, e: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.zeros_like(e, dtype=float)
    nz = e != 0
    out[nz] = -np.inf if x == 0 else e[nz] * math.log(abs(x))
    return out


def _series(n1: float, n2: float, c2: float, k1: int, k2: int) -> NDArray[np.float64]:
    """Term-by-term evaluation of the terminating hypergeometric sum.

    ``P(n, m) = sum_k binom(m, k) binom(m + n - k, n - k)
    b2^(m-k) b12^k b1^(n-k) / A0^(m + n - k + 1)`` with ``b = -A``; every term
    is formed as a signed log-magnitude and the sum is compensated.
    """
    a0, a1, a2, a12 = _pgf_coefficients(n1, n2, c2)
    b1, b2, b12 = max(-a1, 0.0), max(-a2, 0.0), -a12
    p = np.zeros((k1, k2))
    for n in range(k1):
        for m in range(k2):
            k = np.arange(min(n, m) + 1, dtype=float)
            logt = (
                gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
                + gammaln(m + n - k + 1) - gammaln(n - k + 1) - gammaln(m + 1)
                + _log_pow(b2, m - k) + _log_pow(b12, k) + _log_pow(b1, n - k)
                - (m + n - k + 1) * math.log(a0)
            )
            sign = np.where((b12 < 0) & (k % 2 == 1), -1.0, 1.0)
            p[n, m] = math.fsum(sign * np.exp(logt))
    return p


def joint_counts_gaussian(
    e: float,
    s: float,
    c: float,
    *,
    tail: float = PER_ARM_TAIL,
    method: str = "recurrence",
    message: tuple[int, ...] | None = None,
) -> JointCountDistribution:
    """Joint photon-count distribution of a zero-mean two-mode Gaussian state.

    Parameters
    ----------
    e, s : float
        Quadrature variances of the two arms (``2 n + 1``).
    c : float
        Quadrature-unit cross correlation (``2 |c|``).
    tail : float
        Per-arm probability allowed outside the grid.
    method : {"recurrence", "series"}
        ``"series"`` sums the closed hypergeometric form term by term and is
        meant for small grids and cross-checks.
    """
    n1, n2, c2 = _check_params(e, s, c)
    if not 0 < tail < 1:
        raise ValidationError("tail must lie in (0, 1)")
    k1, k2 = _geometric_size(n1, tail), _geometric_size(n2, tail)
    if k1 * k2 > MAX_GRID_CELLS:
        raise ResourceError(f"count grid {k1}x{k2} too large; use Gaussian statistics")
    if method == "recurrence":
        p = _recurrence(n1, n2, c2, k1, k2)
    elif method == "series":
        p = _series(n1, n2, c2, k1, k2)
    else:
        raise ValidationError(f"unknown method {method!r}")
    if p.min() < -_PHYS_TOL:
        raise PhysicalityError(f"negative probability {p.min():.3e} for E={e}, S={s}, C={c}")
    p = np.clip(p, 0.0, None)
    deficit = max(0.0, 1.0 - float(p.sum()))
    return JointCountDistribution(
        p, (0, 0), deficit, message, {"n1": n1, "n2": n2, "abs_c": math.sqrt(c2)}
    )


def two_mode_constants(state: GaussianState, modes: Sequence[int] = (0, 1)) -> tuple[float, float, float]:
    """``(E, S, C)`` of two modes of a zero-mean state with a single kind of correlation."""
    sub = state.reduced(list(modes))
    if np.max(np.abs(sub.mean)) > 1e-12:
        raise ValidationError("photon-count statistics here require a zero-mean state")
    mom = sub.moments()
    scale = max(1.0, float(np.max(np.abs(mom.n))))
    if max(abs(mom.m[0, 0]), abs(mom.m[1, 1])) > 1e-10 * scale:
        raise ValidationError("single-mode squeezing is not supported")
    pi, ps = abs(mom.n[0, 1]), abs(mom.m[0, 1])
    if min(pi, ps) > 1e-10 * scale:
        raise ValidationError("state has both phase-sensitive and phase-insensitive correlations")
    n1, n2 = mom.n[0, 0].real, mom.n[1, 1].real
    return 2 * n1 + 1, 2 * n2 + 1, 2 * max(pi, ps)


def joint_counts_from_state(
    state: GaussianState, modes: Sequence[int] = (0, 1), **kwargs
) -> JointCountDistribution:
    return joint_counts_gaussian(*two_mode_constants(state, modes), **kwargs)


def total_counts_over_copies(
    dist: JointCountDistribution,
    n_r: int,
    *,
    edge_tol: float = 1e-12,
    max_cells: int = MAX_GRID_CELLS,
) -> JointCountDistribution:
    """Distribution of the per-arm count totals over ``n_r`` i.i.d. copies.

    The per-copy generating function is sampled on roots of unity by FFT,
    raised to the ``n_r``-th power and shifted so that the inverse FFT lands on
    a window around the mean. The window starts at mean +- 8 standard
    deviations and grows until the mass in its outer bands is below
    ``edge_tol``, which also bounds the mass aliased into the window.
    """
    if not (isinstance(n_r, (int, np.integer)) and n_r >= 1):
        raise ValidationError(f"n_r must be a positive integer, got {n_r!r}")
    n_r = int(n_r)
    if n_r == 1:
        return dist
    p = dist.probs / dist.total
    mu = n_r * dist.mean()
    sd = np.sqrt(n_r * np.maximum(np.diag(dist.cov()), 0.0))
    base = np.array(dist.offset) * n_r
    width = EDGE_SIGMAS
    while True:
        lo = np.maximum(np.floor(mu - width * sd), base).astype(int)
        hi = np.ceil(mu + width * sd).astype(int) + np.array(p.shape)
        size = hi - lo + 1
        size = np.maximum(size, np.array(p.shape))
        if int(np.prod(size)) > max_cells:
            raise ResourceError(
                f"total-count window {tuple(size)} exceeds {max_cells} cells; "
                "use the Gaussian approximation"
            )
        q = _fft_power(p, n_r, lo - base, size)
        if _edge_mass(q, lo, base, mu, sd, width) <= edge_tol:
            break
        width *= 1.5
    if q.min() < -NEGATIVE_TOL:
        raise PhysicalityError(f"FFT produced negative probability {q.min():.3e}")
    # roundoff noise of the inverse FFT
    q = np.where(q < CLIP_TOL, 0.0, q)
    deficit = 1.0 - (1.0 - dist.mass_deficit) ** n_r
    q = q / q.sum()
    meta = dict(dist.metadata)
    meta.update({"n_r": n_r, "window_sigmas": width})
    return JointCountDistribution(q, tuple(int(v) for v in lo), max(deficit, 0.0), dist.message, meta)


def _fft_power(
    p: NDArray[np.float64], n_r: int, shift: NDArray[np.int64], size: NDArray[np.int64]
) -> NDArray[np.float64]:
    pad = np.zeros(tuple(size))
    pad[tuple(slice(0, k) for k in p.shape)] = p
    f = np.fft.fftn(pad)
    with np.errstate(divide="ignore"):
        logf = np.log(f)
    phase = np.zeros(tuple(size))
    for ax, (sh, n) in enumerate(zip(shift, size)):
        shape = [1] * len(size)
        shape[ax] = n
        phase = phase + (2.0 * np.pi * sh * np.arange(n) / n).reshape(shape)
    t = np.exp(n_r * logf + 1j * phase)
    return np.fft.ifftn(t).real


def _edge_mass(q, lo, base, mu, sd, width) -> float:
    """Mass beyond ``width - 1`` standard deviations on every open side."""
    mass = 0.0
    for ax in range(q.ndim):
        vals = lo[ax] + np.arange(q.shape[ax])
        marg = _marginal(np.where(q < CLIP_TOL, 0.0, q), ax)
        band = np.abs(vals - mu[ax]) > (width - 1.0) * max(sd[ax], 1.0)
        if lo[ax] == base[ax]:
            # the lower edge is the true support boundary, not a cut
            band &= vals > mu[ax]
        mass += float(marg[band].sum())
    return mass


@dataclass(frozen=True)
class DiffGaussianModel:
    """Gaussian model for the copy-averaged detection statistic.

    ``mean`` and ``cov`` are single-copy moments; the statistic averaged over
    ``copies`` repetitions is modelled as ``N(mean, cov / copies)``.
    """

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]
    copies: int = 1
    message: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValidationError("mean and covariance sizes disagree")
        if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, float(np.max(np.abs(cov)))):
            raise ValidationError("covariance must be symmetric")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.linalg.eigvalsh(cov)[0] < -1e-12 * scale:
            raise PhysicalityError("statistic covariance is not positive semidefinite")
        if self.copies < 1:
            raise ValidationError("copies must be >= 1")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def scaled_cov(self) -> NDArray[np.float64]:
        return self.cov / self.copies


def number_moments(state: GaussianState) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Mean vector and covariance of the photon numbers of every mode (Wick)."""
    if np.max(np.abs(state.mean)) > 1e-12:
        raise ValidationError("Wick moments here require a zero-mean state")
    mom = state.moments()
    mean = np.real(np.diag(mom.n)).copy()
    cov = np.abs(mom.n) ** 2 + np.abs(mom.m) ** 2 + np.diag(mean)
    return mean, cov


def linear_statistic_model(
    state: GaussianState, weights: NDArray[np.float64], n_r: int, message=None
) -> DiffGaussianModel:
    """Gaussian model of ``weights @ photon_numbers`` averaged over ``n_r`` copies."""
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if w.shape[1] != state.modes:
        raise ValidationError(f"weights need {state.modes} columns")
    mean, cov = number_moments(state)
    return DiffGaussianModel(w @ mean, w @ cov @ w.T, n_r, message)


def wick_diff_model(
    state: GaussianState,
    arm_pairs: Sequence[tuple[int, int]],
    n_r: int,
    message: tuple[int, ...] | None = None,
) -> DiffGaussianModel:
    """Model of the count differences ``N_X - N_Y`` for each ``(X, Y)`` pair."""
    flat = [m for pair in arm_pairs for m in pair]
    if len(set(flat)) != len(flat):
        raise ValidationError("arm modes must be distinct")
    w = np.zeros((len(arm_pairs), state.modes))
    for k, (x, y) in enumerate(arm_pairs):
        w[k, x], w[k, y] = 1.0, -1.0
    return linear_statistic_model(state, w, n_r, message)


def count_model(
    state: GaussianState, modes: Sequence[int], n_r: int, message=None
) -> DiffGaussianModel:
    """Model of the photon counts of ``modes``."""
    w = np.zeros((len(modes), state.modes))
    for k, m in enumerate(modes):
        w[k, m] = 1.0
    return linear_statistic_model(state, w, n_r, message)


def _message_prob(bits: Sequence[int], priors: Sequence[float]) -> float:
    return math.prod(p if b else 1.0 - p for b, p in zip(bits, priors))


def _entropy_bits(p: NDArray[np.float64]) -> float:
    return float(-np.sum(xlogy(p, p)) / LN2)


def _align(dists: Sequence[JointCountDistribution]) -> list[NDArray[np.float64]]:
    nd = {d.probs.ndim for d in dists}
    if len(nd) != 1:
        raise ValidationError("distributions have different dimensionality")
    lo = np.min([d.offset for d in dists], axis=0)
    hi = np.max([np.array(d.offset) + d.probs.shape for d in dists], axis=0)
    if int(np.prod(hi - lo)) > MAX_GRID_CELLS:
        raise ResourceError("common support of the message distributions is too large")
    out = []
    for d in dists:
        a = np.zeros(tuple(hi - lo))
        start = np.array(d.offset) - lo
        a[tuple(slice(s0, s0 + k) for s0, k in zip(start, d.probs.shape))] = d.probs / d.total
        out.append(a)
    return out


def _gaussian_entropy_bits(cov: NDArray[np.float64]) -> float:
    d = cov.shape[0]
    sign, logdet = np.linalg.slogdet(cov)
    return 0.5 * (d * math.log(2 * math.pi * math.e) + logdet) / LN2


def _mixture_cross_entropy(
    comps: Sequence[DiffGaussianModel], weights: Sequence[float], order: int
) -> float:
    """``-sum_m w_m E_{x ~ m}[log2 p_mix(x)]`` by tensor Gauss-Hermite quadrature."""
    d = comps[0].mean.size
    t, wt = roots_hermite(order)
    nodes = np.array(list(itertools.product(t, repeat=d)))
    wq = np.prod(np.array(list(itertools.product(wt, repeat=d))), axis=1) / math.pi ** (d / 2)
    facs = []
    for c in comps:
        cf = cho_factor(c.scaled_cov, lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
        facs.append((c.mean, cf, logdet))
    logw = np.log(np.asarray(weights))
    total = 0.0
    for wm, comp in zip(weights, comps):
        chol = np.linalg.cholesky(comp.scaled_cov)
        x = comp.mean + math.sqrt(2.0) * nodes @ chol.T
        logs = []
        for lw, (mu, cf, logdet) in zip(logw, facs):
            r = x - mu
            quad = np.einsum("ij,ij->i", r, cho_solve(cf, r.T).T)
            logs.append(lw - 0.5 * (quad + logdet + d * math.log(2 * math.pi)))
        logmix = logsumexp(np.array(logs), axis=0)
        total -= wm * float(np.dot(wq, logmix))
    return total / LN2


def _gaussian_mixture_mi(
    comps: Sequence[DiffGaussianModel], weights: Sequence[float], tol: float
) -> float:
    first = comps[0]
    if all(
        np.array_equal(c.mean, first.mean) and np.array_equal(c.scaled_cov, first.scaled_cov)
        for c in comps
    ):
        return 0.0
    for c in comps:
        if np.linalg.eigvalsh(c.scaled_cov)[0] <= 0:
            raise PhysicalityError("distinct messages with a singular statistic covariance")
    cond = sum(w * _gaussian_entropy_bits(c.scaled_cov) for w, c in zip(weights, comps))
    d = comps[0].mean.size
    order, prev = 8, None
    max_order = {1: 400, 2: 160, 3: 48}.get(d, 16)
    while True:
        cur = _mixture_cross_entropy(comps, weights, order) - cond
        if prev is not None and abs(cur - prev) <= tol:
            return cur
        if order >= max_order:
            raise ResourceError(
                f"Gauss-Hermite integration did not converge (|delta|={abs(cur - prev):.2e} bits)"
            )
        prev = cur
        order = min(int(order * 1.5) + 1, max_order)


def conditional_shannon_mi(
    family: Mapping[tuple[int, ...], JointCountDistribution | DiffGaussianModel],
    subset: Sequence[int],
    priors: Sequence[float] | None = None,
    tol: float = 1e-8,
) -> float:
    """``I(M[J]; Y | M[J^c])`` in bits for BPSK messages.

    ``family`` maps every ``s``-bit message to its outcome distribution,
    either discrete (on any windows, aligned here) or Gaussian.
    ``priors[k]`` is the probability that sender ``k`` sends bit 1.
    """
    keys = list(family)
    if not keys:
        raise ValidationError("empty message family")
    s = len(keys[0])
    if set(keys) != set(itertools.product((0, 1), repeat=s)):
        raise ValidationError(f"family must contain all {2**s} messages")
    priors = [0.5] * s if priors is None else list(priors)
    if len(priors) != s or any(not 0 <= p <= 1 for p in priors):
        raise ValidationError("priors must hold one probability per sender")
    subset = sorted(set(subset))
    if not subset or any(not 0 <= k < s for k in subset):
        raise ValidationError(f"invalid subset {subset}")
    rest = [k for k in range(s) if k not in subset]
    values = list(family.values())
    discrete = isinstance(values[0], JointCountDistribution)
    if any(isinstance(v, JointCountDistribution) != discrete for v in values):
        raise ValidationError("cannot mix discrete and Gaussian outcome models")
    if discrete:
        arrays = dict(zip(keys, _align(values)))
    total = 0.0
    for rest_bits in itertools.product((0, 1), repeat=len(rest)):
        p_rest = _message_prob(rest_bits, [priors[k] for k in rest])
        if p_rest == 0:
            continue
        msgs, w = [], []
        for sub_bits in itertools.product((0, 1), repeat=len(subset)):
            bits = [0] * s
            for k, b in zip(rest, rest_bits):
                bits[k] = b
            for k, b in zip(subset, sub_bits):
                bits[k] = b
            pw = _message_prob(sub_bits, [priors[k] for k in subset])
            if pw > 0:
                msgs.append(tuple(bits))
                w.append(pw)
        if discrete:
            mix = sum(wi * arrays[m] for wi, m in zip(w, msgs))
            val = _entropy_bits(mix) - sum(wi * _entropy_bits(arrays[m]) for wi, m in zip(w, msgs))
        else:
            val = _gaussian_mixture_mi([family[m] for m in msgs], w, tol)
        total += p_rest * val
    return max(float(total), 0.0)
