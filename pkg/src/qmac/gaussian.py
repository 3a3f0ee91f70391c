"""Multimode Gaussian states and their entropies.

Quadratures follow ``q = a + a^dag`` and ``p = -i (a - a^dag)``, so the vacuum
has unit variance and a thermal mode with mean photon number ``n`` has
covariance ``(2n + 1) I``. Vectors are ordered ``q1, p1, q2, p2, ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import PhysicalityError, ValidationError

LN2 = np.log(2.0)

# symplectic eigenvalues in [1 - NU_REJECT, 1) are clamped to 1
NU_REJECT = 1e-6
SYMMETRY_TOL = 1e-12
# symplectic eigenvalues within this many units of roundoff (times the largest
# covariance eigenvalue) of 1 are taken to be exactly 1
NU_NOISE = 64 * np.finfo(float).eps


def g(x: ArrayLike) -> NDArray[np.float64] | float:
    """Entropy in bits of a thermal mode with mean photon number ``x``.

    ``g(x) = (x + 1) log2(x + 1) - x log2(x)``, with ``g(0) = 0``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValidationError(f"g(x) requires x >= 0, got {x!r}")
    out = np.zeros_like(arr)
    tiny = arr < 1e-12
    big = ~tiny
    xb = arr[big]
    # log(1 + x) + x log(1 + 1/x): two positive terms, no cancellation
    out[big] = (np.log1p(xb) + xb * np.log1p(1.0 / xb)) / LN2
    xt = arr[tiny]
    pos = xt > 0
    # leading order of the closed form: x (log2 e - log2 x)
    out_t = np.zeros_like(xt)
    out_t[pos] = xt[pos] * (1.0 / LN2 - np.log2(xt[pos]))
    out[tiny] = out_t
    return float(out) if out.ndim == 0 else out


_PHI_SERIES_MAX = 0.1
_PHI_TERMS = np.arange(2, 24)
_PHI_COEF = ((-1.0) ** _PHI_TERMS) / (_PHI_TERMS * (_PHI_TERMS - 1.0))


def _phi(u: float) -> float:
    """``(1 + u) log(1 + u) - u``, which is ``u^2 / 2 + O(u^3)``."""
    if abs(u) < _PHI_SERIES_MAX:
        return float(np.sum(_PHI_COEF * u**_PHI_TERMS))
    return (1.0 + u) * math.log1p(u) - u


def g_diff(x: float, d: float) -> float:
    """Return ``g(x + d) - g(x)`` without cancellation for large ``x``.

    Uses ``g(x + d) - g(x) = d log(1 + 1/x) + (x + 1) phi(d / (x + 1)) - x phi(d / x)``
    (natural logs), so only second-order remainders are subtracted.
    """
    if x < 0 or x + d < 0:
        raise ValidationError(f"g_diff requires x >= 0 and x + d >= 0, got {x}, {d}")
    if d == 0.0:
        return 0.0
    if x < 1e-12 or x + d < 1e-12:
        # g of the small argument is itself tiny: no cancellation to avoid
        return float(g(x + d)) - float(g(x))
    val = d * math.log1p(1.0 / x) + (x + 1.0) * _phi(d / (x + 1.0)) - x * _phi(d / x)
    return float(val / LN2)


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """Block-diagonal symplectic form for ``n_modes`` modes."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def mode_indices(modes: Sequence[int]) -> list[int]:
    """Quadrature indices ``[2i, 2i + 1, ...]`` of the given modes."""
    out: list[int] = []
    for m in modes:
        out.extend((2 * m, 2 * m + 1))
    return out


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and quadrature covariance of an ``M``-mode Gaussian state.

    Construction validates shape and symmetry only; physicality is checked by
    :func:`symplectic_eigenvalues` (and therefore by every entropy call).
    """

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size % 2 or cov.shape != (mean.size, mean.size) or mean.size == 0:
            raise ValidationError(
                f"inconsistent shapes: mean {mean.shape}, cov {cov.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise ValidationError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def modes(self) -> int:
        return self.mean.size // 2

    @classmethod
    def vacuum(cls, modes: int = 1) -> "GaussianState":
        return cls(np.zeros(2 * modes), np.eye(2 * modes))

    @classmethod
    def thermal(cls, n: float | Sequence[float]) -> "GaussianState":
        """Product of thermal modes with the given mean photon numbers."""
        ns = np.atleast_1d(np.asarray(n, dtype=float))
        if np.any(ns < 0):
            raise ValidationError("thermal photon numbers must be >= 0")
        return cls(np.zeros(2 * ns.size), np.diag(np.repeat(2 * ns + 1, 2)))

    def reduced(self, subset: Sequence[int]) -> "GaussianState":
        """Partial trace onto ``subset`` (kept in the given order)."""
        subset = list(subset)
        if not subset:
            raise ValidationError("subset must be nonempty")
        if len(set(subset)) != len(subset) or min(subset) < 0 or max(subset) >= self.modes:
            raise ValidationError(f"invalid mode subset {subset} for {self.modes} modes")
        idx = mode_indices(subset)
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def tensor(self, other: "GaussianState") -> "GaussianState":
        n, m = self.mean.size, other.mean.size
        cov = np.zeros((n + m, n + m))
        cov[:n, :n] = self.cov
        cov[n:, n:] = other.cov
        return GaussianState(np.concatenate([self.mean, other.mean]), cov)

    def moments(self) -> "ComplexMoments":
        return quadrature_to_complex(self)

    def photon_numbers(self) -> NDArray[np.float64]:
        """Mean photon number of every mode."""
        m = self.moments()
        return np.real(np.diag(m.n)).copy()


@dataclass(frozen=True, eq=False)
class ComplexMoments:
    """Second moments ``n[i, j] = <a_i^dag a_j>`` and ``m[i, j] = <a_i a_j>``.

    First moments ``alpha[i] = <a_i>`` default to zero. Moments are raw
    (not centred), matching the way correlation constants are usually quoted.
    """

    n: NDArray[np.complex128]
    m: NDArray[np.complex128]
    alpha: NDArray[np.complex128] | None = None

    def __post_init__(self) -> None:
        n = np.array(self.n, dtype=complex)
        m = np.array(self.m, dtype=complex)
        k = n.shape[0]
        if n.shape != (k, k) or m.shape != (k, k):
            raise ValidationError("moment matrices must be square and equally sized")
        alpha = np.zeros(k, complex) if self.alpha is None else np.array(self.alpha, complex)
        scale = max(1.0, float(np.max(np.abs(n))), float(np.max(np.abs(m))))
        if np.max(np.abs(n - n.conj().T)) > 1e-10 * scale:
            raise ValidationError("<a_i^dag a_j> must be Hermitian")
        if np.max(np.abs(m - m.T)) > 1e-10 * scale:
            raise ValidationError("<a_i a_j> must be symmetric")
        if np.any(np.real(np.diag(n)) < -1e-12 * scale):
            raise ValidationError("photon numbers must be nonnegative")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "alpha", alpha)

    @property
    def modes(self) -> int:
        return self.n.shape[0]

    def ladder_matrix(self) -> NDArray[np.complex128]:
        """``<xi xi^dag>`` for ``xi = (a_1, a_1^dag, a_2, a_2^dag, ...)``."""
        k = self.modes
        v = np.zeros((2 * k, 2 * k), complex)
        eye = np.eye(k)
        v[0::2, 0::2] = self.n.T + eye  # <a_i a_j^dag>
        v[0::2, 1::2] = self.m  # <a_i a_j>
        v[1::2, 0::2] = self.m.conj()  # <a_i^dag a_j^dag>
        v[1::2, 1::2] = self.n  # <a_i^dag a_j>
        return v


_U = np.array([[1.0, 1.0], [-1.0j, 1.0j]])


def _u_matrix(modes: int) -> NDArray[np.complex128]:
    return np.kron(np.eye(modes), _U)


def complex_to_quadrature(moments: ComplexMoments) -> GaussianState:
    """Quadrature state from ladder moments via ``Re(U <xi xi^dag> U^dag)``.

    ``U`` maps ``(a, a^dag)`` to ``(q, p)`` mode by mode; taking the real part
    symmetrises the quadrature products.
    """
    k = moments.modes
    u = _u_matrix(k)
    alpha = moments.alpha
    mean = np.empty(2 * k)
    mean[0::2] = 2 * alpha.real
    mean[1::2] = 2 * alpha.imag
    raw = u @ moments.ladder_matrix() @ u.conj().T
    cov = raw.real - np.outer(mean, mean)
    return GaussianState(mean, cov)


def quadrature_to_complex(state: GaussianState) -> ComplexMoments:
    """Inverse of :func:`complex_to_quadrature`."""
    k = state.modes
    u_inv = np.linalg.inv(_u_matrix(k))
    raw = state.cov + 1j * symplectic_form(k) + np.outer(state.mean, state.mean)
    v = u_inv @ raw @ u_inv.conj().T
    alpha = 0.5 * (state.mean[0::2] + 1j * state.mean[1::2])
    n = v[1::2, 1::2]
    m = v[0::2, 1::2]
    return ComplexMoments(0.5 * (n + n.conj().T), 0.5 * (m + m.T), alpha)


def symplectic_eigenvalues(state: GaussianState) -> NDArray[np.float64]:
    """Williamson spectrum of the covariance, sorted ascending.

    Computed as the moduli of the eigenvalues of ``Omega V`` (which come in
    pairs ``+-i nu``). With thermal modes of ``10^4`` photons this keeps the
    small ``nu`` far more accurate than a symmetric square-root construction,
    which loses ``eps ||V||`` absolutely; ``g`` amplifies such errors near
    ``nu = 1``.
    Values in ``[1 - 1e-6, 1 + 64 eps lambda_max]`` are returned as exactly 1.

    Raises
    ------
    PhysicalityError
        If the covariance is not positive definite or some ``nu < 1 - 1e-6``.
    """
    cov = state.cov
    k = state.modes
    lam = np.linalg.eigvalsh(cov)
    if lam[0] <= 0:
        raise PhysicalityError(
            f"covariance is not positive definite (min eigenvalue {lam[0]:.3e})"
        )
    ev = np.linalg.eigvals(symplectic_form(k) @ cov)
    nu = np.sort(np.abs(ev))
    # average each +-i nu pair
    nu = 0.5 * (nu[0::2] + nu[1::2])
    if nu[0] < 1.0 - NU_REJECT:
        raise PhysicalityError(
            f"uncertainty principle violated: symplectic eigenvalue {nu[0]:.12g} < 1"
        )
    # nu - 1 cannot be resolved below roundoff at the scale of the covariance;
    # left alone, that noise enters g where its slope is unbounded
    floor = NU_NOISE * lam[-1]
    return np.where(nu <= 1.0 + floor, 1.0, nu)


def von_neumann_entropy(state: GaussianState, subset: Sequence[int] | None = None) -> float:
    """Entropy in bits of the reduced state on ``subset`` (all modes by default)."""
    sub = state if subset is None else state.reduced(subset)
    nu = symplectic_eigenvalues(sub)
    return float(np.sum(g((nu - 1.0) / 2.0)))
