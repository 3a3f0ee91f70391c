"""Truncated Fock-space simulator used as an independent check of the Gaussian engine.

The whole circuit is simulated as a pure state: thermal inputs and the loss
environment are purified by a hidden partner mode, and discarded modes stay in
the state vector as hidden axes. Two-mode gates are exponentiated, one
conserved-charge block at a time, on a cutoff
enlarged by ``PAD`` levels and then cropped, so any amplitude pushed above the
cutoff shows up as a trace deficit instead of being silently folded back by a
unitary truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .circuit import (
    OPA,
    AddThermal,
    AddVacuum,
    BeamSplitter,
    CircuitElement,
    Discard,
    Loss,
    Phase,
)
from .exceptions import CutoffError, ValidationError
from .gaussian import LN2, ComplexMoments

DEFAULT_CUTOFF = 40
PAD = 12
MAX_AMPLITUDES = 2**25


def _lowering(d: int) -> NDArray[np.float64]:
    return np.diag(np.sqrt(np.arange(1.0, d)), 1)


@dataclass
class FockResult:
    """Final pure state over visible and hidden modes."""

    psi: NDArray[np.complex128]
    visible: list[int]
    cutoff: int

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.psi, self.psi).real)

    @property
    def trace_deficit(self) -> float:
        return 1.0 - self.norm2

    def _visible_first(self) -> NDArray[np.complex128]:
        hidden = [a for a in range(self.psi.ndim) if a not in self.visible]
        arr = np.transpose(self.psi, self.visible + hidden)
        return arr.reshape(self.cutoff ** len(self.visible), -1)

    def counts(self) -> NDArray[np.float64]:
        """Photon-count table of the visible modes, renormalised to the kept mass."""
        flat = self._visible_first()
        p = np.sum(np.abs(flat) ** 2, axis=1) / self.norm2
        return p.reshape((self.cutoff,) * len(self.visible))

    def density_matrix(self) -> NDArray[np.complex128]:
        flat = self._visible_first()
        return flat @ flat.conj().T / self.norm2

    def entropy(self) -> float:
        """Von Neumann entropy (bits) of the visible modes."""
        ev = np.linalg.eigvalsh(self.density_matrix())
        ev = ev[ev > 1e-300]
        return float(-np.sum(ev * np.log(ev)) / LN2)

    def _lower(self, arr: NDArray[np.complex128], mode: int) -> NDArray[np.complex128]:
        ax = self.visible[mode]
        coeff = np.sqrt(np.arange(self.cutoff, dtype=float))
        out = np.zeros_like(arr)
        src = [slice(None)] * arr.ndim
        dst = [slice(None)] * arr.ndim
        src[ax] = slice(1, None)
        dst[ax] = slice(0, -1)
        shape = [1] * arr.ndim
        shape[ax] = self.cutoff - 1
        out[tuple(dst)] = arr[tuple(src)] * coeff[1:].reshape(shape)
        return out

    def moments(self) -> ComplexMoments:
        """``<a_i^dag a_j>``, ``<a_i a_j>`` and ``<a_i>`` of the visible modes."""
        k = len(self.visible)
        lowered = [self._lower(self.psi, i) for i in range(k)]
        norm = self.norm2
        n = np.zeros((k, k), complex)
        m = np.zeros((k, k), complex)
        alpha = np.zeros(k, complex)
        for i in range(k):
            alpha[i] = np.vdot(self.psi, lowered[i]) / norm
            for j in range(k):
                n[i, j] = np.vdot(lowered[i], lowered[j]) / norm
                m[i, j] = np.vdot(self.psi, self._lower(lowered[j], i)) / norm
        return ComplexMoments(0.5 * (n + n.conj().T), 0.5 * (m + m.T), alpha)


class _Simulator:
    def __init__(self, n_modes: int, cutoff: int) -> None:
        if cutoff < 2:
            raise ValidationError("cutoff must be >= 2")
        self.d = cutoff
        psi = np.zeros((cutoff,) * n_modes, complex)
        psi[(0,) * n_modes] = 1.0
        self.psi = psi
        self.visible = list(range(n_modes))
        big = cutoff + PAD
        lower = _lowering(big)
        eye = np.eye(big)
        self._a = np.kron(lower, eye)
        self._b = np.kron(eye, lower)
        self._big = big
        n_i, n_j = np.divmod(np.arange(big * big), big)
        # beamsplitters conserve n_i + n_j, two-mode squeezers n_i - n_j
        self._total = n_i + n_j
        self._difference = n_i - n_j

    def _new_axis(self, amplitudes: NDArray[np.complex128]) -> int:
        self._check_size(self.psi.size * self.d)
        self.psi = np.multiply.outer(self.psi, amplitudes)
        return self.psi.ndim - 1

    def _check_size(self, size: int) -> None:
        if size > MAX_AMPLITUDES:
            raise ValidationError(
                f"state vector of {size} amplitudes is too large; lower the cutoff or mode count"
            )

    def add_vacuum(self) -> None:
        v = np.zeros(self.d, complex)
        v[0] = 1.0
        self.visible.append(self._new_axis(v))

    def add_thermal_pair(self, n: float) -> tuple[int, int]:
        """Append a visible thermal mode and its hidden purification."""
        self._check_size(self.psi.size * self.d * self.d)
        k = np.arange(self.d)
        amp = np.sqrt(n**k / (n + 1.0) ** (k + 1.0)) if n > 0 else (k == 0).astype(float)
        pair = np.diag(amp).astype(complex)
        self.psi = np.multiply.outer(self.psi, pair)
        return self.psi.ndim - 2, self.psi.ndim - 1

    def two_mode(
        self, ax_i: int, ax_j: int, generator: NDArray[np.float64], charge: NDArray[np.int64]
    ) -> None:
        """Apply ``exp(generator)``; ``charge`` labels the conserved sectors."""
        d, big = self.d, self._big
        u = np.zeros_like(generator)
        for q in np.unique(charge):
            idx = np.flatnonzero(charge == q)
            u[np.ix_(idx, idx)] = expm(generator[np.ix_(idx, idx)])
        u = u.reshape(big, big, big, big)[:d, :d, :d, :d]
        out = np.tensordot(u, self.psi, axes=([2, 3], [ax_i, ax_j]))
        self.psi = np.moveaxis(out, (0, 1), (ax_i, ax_j))

    def beamsplitter(self, t: float, ax_i: int, ax_j: int) -> None:
        theta = math.acos(math.sqrt(t))
        a, b = self._a, self._b
        self.two_mode(ax_i, ax_j, theta * (a.T @ b - a @ b.T), self._total)

    def opa(self, excess: float, ax_i: int, ax_j: int) -> None:
        r = math.asinh(math.sqrt(excess))
        a, b = self._a, self._b
        self.two_mode(ax_i, ax_j, r * (a.T @ b.T - a @ b), self._difference)

    def phase(self, theta: float, ax: int) -> None:
        shape = [1] * self.psi.ndim
        shape[ax] = self.d
        self.psi = self.psi * np.exp(1j * theta * np.arange(self.d)).reshape(shape)

    def apply(self, elem: CircuitElement) -> None:
        vis = self.visible
        if isinstance(elem, BeamSplitter):
            self.beamsplitter(elem.t, vis[elem.i], vis[elem.j])
        elif isinstance(elem, OPA):
            self.opa(elem.excess, vis[elem.i], vis[elem.j])
        elif isinstance(elem, Phase):
            self.phase(elem.theta, vis[elem.i])
        elif isinstance(elem, AddVacuum):
            self.add_vacuum()
        elif isinstance(elem, AddThermal):
            ax, _ = self.add_thermal_pair(elem.n)
            vis.append(ax)
        elif isinstance(elem, Discard):
            vis.pop(elem.i)
        elif isinstance(elem, Loss):
            if elem.tau == 1.0:
                if elem.n_b > 0:
                    raise ValidationError("additive noise without loss is not representable here")
                return
            env, _ = self.add_thermal_pair(elem.n_b / (1.0 - elem.tau))
            self.beamsplitter(elem.tau, vis[elem.i], env)
        else:
            raise ValidationError(f"unsupported circuit element {elem!r}")


def fock_oracle(
    circuit: Sequence[CircuitElement],
    cutoff: int = DEFAULT_CUTOFF,
    n_modes: int = 1,
    max_deficit: float = 1e-6,
) -> FockResult:
    """Run ``circuit`` on ``n_modes`` vacua in a truncated Fock basis.

    Raises
    ------
    CutoffError
        If the probability lost to truncation exceeds ``max_deficit``.
    """
    sim = _Simulator(n_modes, cutoff)
    for elem in circuit:
        sim.apply(elem)
    res = FockResult(sim.psi, list(sim.visible), cutoff)
    if res.trace_deficit > max_deficit:
        raise CutoffError(
            f"trace deficit {res.trace_deficit:.3e} exceeds {max_deficit:.1e} at cutoff {cutoff}"
        )
    return res
