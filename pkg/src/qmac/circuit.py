"""Optical circuit elements acting on Gaussian states, and the thermal-loss MAC.

Conventions used throughout:

* beamsplitter ``BeamSplitter(t, i, j)``:
  ``a_i -> sqrt(t) a_i + sqrt(1-t) a_j``, ``a_j -> -sqrt(1-t) a_i + sqrt(t) a_j``
* phase ``Phase(theta, i)``: ``a_i -> exp(i theta) a_i``
* amplifier ``OPA(G, i, j)``: ``a_i -> sqrt(G) a_i + sqrt(G-1) a_j^dag`` and
  symmetrically for ``a_j``
* loss ``Loss(tau, n_b, i)``: ``a_i -> sqrt(tau) a_i + sqrt(1-tau) a_E`` with the
  environment thermal at ``n_b / (1 - tau)``, i.e. exactly ``n_b`` photons added
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .exceptions import ValidationError
from .gaussian import GaussianState, mode_indices


def _check_mode(state: GaussianState, *modes: int) -> None:
    for m in modes:
        if not 0 <= m < state.modes:
            raise ValidationError(f"mode index {m} out of range for {state.modes} modes")
    if len(set(modes)) != len(modes):
        raise ValidationError(f"mode indices must be distinct, got {modes}")


def _symplectic_update(
    state: GaussianState, modes: Sequence[int], s_local: NDArray[np.float64]
) -> GaussianState:
    idx = mode_indices(modes)
    s = np.eye(state.mean.size)
    s[np.ix_(idx, idx)] = s_local
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


@dataclass(frozen=True)
class BeamSplitter:
    t: float
    i: int
    j: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.t <= 1.0:
            raise ValidationError(f"beamsplitter transmissivity must be in [0, 1], got {self.t}")

    def apply(self, state: GaussianState) -> GaussianState:
        _check_mode(state, self.i, self.j)
        c, s = math.sqrt(self.t), math.sqrt(1.0 - self.t)
        local = np.kron(np.array([[c, s], [-s, c]]), np.eye(2))
        return _symplectic_update(state, (self.i, self.j), local)


@dataclass(frozen=True)
class Phase:
    theta: float
    i: int

    def apply(self, state: GaussianState) -> GaussianState:
        _check_mode(state, self.i)
        c, s = math.cos(self.theta), math.sin(self.theta)
        return _symplectic_update(state, (self.i,), np.array([[c, -s], [s, c]]))


@dataclass(frozen=True)
class OPA:
    """Two-mode squeezer of gain ``G``.

    ``excess`` is ``G - 1``; pass it (see :meth:`from_excess`) when it is
    smaller than the resolution of ``G`` itself, as for dim sources.
    """

    gain: float
    i: int
    j: int
    excess: float | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.gain >= 1.0:
            raise ValidationError(f"OPA gain must be >= 1, got {self.gain}")
        if self.excess is None:
            object.__setattr__(self, "excess", self.gain - 1.0)
        elif not self.excess >= 0.0 or abs(1.0 + self.excess - self.gain) > 4e-16 * self.gain:
            raise ValidationError(f"OPA excess {self.excess} is inconsistent with gain {self.gain}")

    @classmethod
    def from_excess(cls, excess: float, i: int, j: int) -> "OPA":
        if not excess >= 0.0:
            raise ValidationError(f"OPA excess gain must be >= 0, got {excess}")
        return cls(1.0 + excess, i, j, excess)

    def apply(self, state: GaussianState) -> GaussianState:
        _check_mode(state, self.i, self.j)
        a, b = math.sqrt(self.gain), math.sqrt(self.excess)
        z = np.diag([1.0, -1.0])
        local = np.block([[a * np.eye(2), b * z], [b * z, a * np.eye(2)]])
        return _symplectic_update(state, (self.i, self.j), local)


@dataclass(frozen=True)
class Loss:
    tau: float
    n_b: float
    i: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"transmissivity must be in [0, 1], got {self.tau}")
        if not self.n_b >= 0.0:
            raise ValidationError(f"thermal photon number must be >= 0, got {self.n_b}")

    def apply(self, state: GaussianState) -> GaussianState:
        _check_mode(state, self.i)
        idx = mode_indices((self.i,))
        x = np.ones(state.mean.size)
        x[idx] = math.sqrt(self.tau)
        cov = state.cov * np.outer(x, x)
        # (1 - tau) * (2 n_b / (1 - tau) + 1), finite at tau = 1
        added = 2.0 * self.n_b + (1.0 - self.tau)
        cov[idx, idx] += added
        return GaussianState(state.mean * x, cov)


@dataclass(frozen=True)
class AddVacuum:
    def apply(self, state: GaussianState) -> GaussianState:
        return state.tensor(GaussianState.vacuum(1))


@dataclass(frozen=True)
class AddThermal:
    n: float

    def __post_init__(self) -> None:
        if not self.n >= 0.0:
            raise ValidationError(f"thermal photon number must be >= 0, got {self.n}")

    def apply(self, state: GaussianState) -> GaussianState:
        return state.tensor(GaussianState.thermal(self.n))


@dataclass(frozen=True)
class Discard:
    i: int

    def apply(self, state: GaussianState) -> GaussianState:
        _check_mode(state, self.i)
        if state.modes == 1:
            raise ValidationError("cannot discard the only remaining mode")
        return state.reduced([k for k in range(state.modes) if k != self.i])


CircuitElement = Union[BeamSplitter, Phase, OPA, Loss, AddVacuum, AddThermal, Discard]


def apply_element(state: GaussianState, elem: CircuitElement) -> GaussianState:
    """Apply one circuit element to a Gaussian state."""
    return elem.apply(state)


def run_circuit(circuit: Iterable[CircuitElement], state: GaussianState) -> GaussianState:
    """Apply ``circuit`` to ``state`` element by element."""
    for e in circuit:
        state = e.apply(state)
    return state


def tmsv(n_s: float) -> GaussianState:
    """Two-mode squeezed vacuum with ``n_s`` photons per mode (signal, idler)."""
    if not n_s >= 0:
        raise ValidationError(f"TMSV brightness must be >= 0, got {n_s}")
    return OPA.from_excess(n_s, 0, 1).apply(GaussianState.vacuum(2))


@dataclass(frozen=True)
class MacScenario:
    """Parameters of an ``s``-sender bosonic thermal-loss MAC.

    Parameters
    ----------
    eta : sequence of float
        Beamsplitter-array weights, nonnegative and summing to one.
    tau : float
        Transmissivity of the shared loss channel.
    n_b : float
        Thermal photons added at the output.
    n_s : sequence of float
        Source brightness of each sender.
    """

    eta: tuple[float, ...]
    tau: float
    n_b: float
    n_s: tuple[float, ...]

    def __post_init__(self) -> None:
        eta = tuple(float(e) for e in np.atleast_1d(self.eta))
        n_s = tuple(float(n) for n in np.atleast_1d(self.n_s))
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "n_s", n_s)
        if len(eta) == 0:
            raise ValidationError("at least one sender is required")
        if len(n_s) != len(eta):
            raise ValidationError(f"need {len(eta)} brightness values, got {len(n_s)}")
        if any(not e >= 0 for e in eta) or abs(sum(eta) - 1.0) > 1e-12:
            raise ValidationError(f"eta must be nonnegative and sum to 1, got {eta}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"tau must be in [0, 1], got {self.tau}")
        if not self.n_b >= 0.0:
            raise ValidationError(f"n_b must be >= 0, got {self.n_b}")
        if any(not n >= 0 for n in n_s):
            raise ValidationError(f"n_s must be >= 0, got {n_s}")

    @property
    def s(self) -> int:
        return len(self.eta)

    @property
    def received_photons(self) -> float:
        """Mean photon number of the received mode."""
        return self.tau * sum(e * n for e, n in zip(self.eta, self.n_s)) + self.n_b

    def permuted(self, order: Sequence[int]) -> "MacScenario":
        return MacScenario(
            tuple(self.eta[k] for k in order), self.tau, self.n_b, tuple(self.n_s[k] for k in order)
        )

    def to_dict(self) -> dict:
        return {"eta": list(self.eta), "tau": self.tau, "n_b": self.n_b, "n_s": list(self.n_s)}

    @classmethod
    def from_dict(cls, d: dict) -> "MacScenario":
        try:
            return cls(tuple(d["eta"]), float(d["tau"]), float(d["n_b"]), tuple(d["n_s"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad scenario {d!r}: {exc}") from exc


def mixing_cascade(eta: Sequence[float], modes: Sequence[int]) -> list[BeamSplitter]:
    """Beamsplitters leaving ``sum_k sqrt(eta_k) a_k`` on ``modes[0]``."""
    out = []
    cum = eta[0]
    for k in range(1, len(eta)):
        new = cum + eta[k]
        t = 1.0 if new == 0 else cum / new
        out.append(BeamSplitter(min(1.0, t), modes[0], modes[k]))
        cum = new
    return out


def mac_circuit(scn: MacScenario, phases: Sequence[float] | None = None) -> list[CircuitElement]:
    """Circuit producing modes ``(B, A'_1, ..., A'_s)`` from ``2s`` vacua.

    Mode ``2k`` holds signal ``A_k`` and ``2k + 1`` idler ``A'_k`` before mixing.
    """
    s = scn.s
    phases = [0.0] * s if phases is None else list(phases)
    if len(phases) != s:
        raise ValidationError(f"need {s} phases, got {len(phases)}")
    circ: list[CircuitElement] = []
    for k in range(s):
        circ.append(OPA.from_excess(scn.n_s[k], 2 * k, 2 * k + 1))
        if phases[k] != 0.0:
            circ.append(Phase(phases[k], 2 * k))
    circ.extend(mixing_cascade(scn.eta, [2 * k for k in range(s)]))
    circ.append(Loss(scn.tau, scn.n_b, 0))
    for k in range(s - 1, 0, -1):
        circ.append(Discard(2 * k))
    return circ


def mac_output_state(scn: MacScenario, phases: Sequence[float] | None = None) -> GaussianState:
    """Joint state of the received mode and all idlers: modes ``(B, A'_1..A'_s)``.

    Each sender's TMSV signal is phase-shifted by ``phases[k]`` before the
    beamsplitter array.
    """
    return run_circuit(mac_circuit(scn, phases), GaussianState.vacuum(2 * scn.s))
