"""Estimator-style wrappers: ``fit`` a scenario, ``predict`` rate membership.

``fit`` takes a :class:`~qmac.circuit.MacScenario` (or its dict form) and
computes the region; ``predict`` takes an ``(n_points, s)`` array of rate
tuples and says which are achievable.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .circuit import MacScenario
from .exceptions import ValidationError
from .receivers import ReceiverConfig, receiver_rate_region
from .regions import (
    RateRegion,
    classical_outer_region,
    coherent_region,
    ea_outer_region,
    mask_members,
    tmsv_region,
)

_BUILDERS = {
    "coherent": coherent_region,
    "classical-outer": classical_outer_region,
    "ea-outer": ea_outer_region,
    "tmsv": tmsv_region,
}


def check_scenario(scenario) -> MacScenario:
    """Accept a scenario object or its dict form."""
    if isinstance(scenario, MacScenario):
        return scenario
    if isinstance(scenario, dict):
        return MacScenario.from_dict(scenario)
    raise ValidationError(f"expected a MacScenario or dict, got {type(scenario).__name__}")


def check_rates(rates: ArrayLike, s: int) -> NDArray[np.float64]:
    """Validate an ``(n_points, s)`` array of finite rates."""
    try:
        arr = check_array(rates, ensure_2d=True, dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if arr.shape[1] != s:
        raise ValidationError(f"rates must have {s} columns, got {arr.shape[1]}")
    return arr


class _RegionEstimator(BaseEstimator):
    def _build(self, scn: MacScenario) -> RateRegion:
        raise NotImplementedError

    def fit(self, X, y=None):
        scn = check_scenario(X)
        region = self._build(scn)
        if getattr(self, "quantum", False):
            region = region.quantum()
        self.scenario_ = scn
        self.region_ = region
        self.n_senders_ = scn.s
        return self

    def decision_function(self, rates: ArrayLike) -> NDArray[np.float64]:
        """Smallest constraint margin per point; nonnegative means achievable."""
        check_is_fitted(self, "region_")
        r = check_rates(rates, self.n_senders_)
        reg = self.region_
        margins = [r.min(axis=1)]
        for m, b in reg.bounds.items():
            margins.append(b - r[:, mask_members(m, reg.s)].sum(axis=1))
        return np.min(np.vstack(margins), axis=0)

    def predict(self, rates: ArrayLike) -> NDArray[np.bool_]:
        return self.decision_function(rates) >= -self.slack


class CapacityRegion(_RegionEstimator):
    """Analytic region: ``coherent``, ``classical-outer``, ``ea-outer`` or ``tmsv``.

    ``quantum=True`` halves every bound (quantum rates via teleportation).
    """

    def __init__(self, kind: str = "tmsv", quantum: bool = False, slack: float = 0.0):
        self.kind = kind
        self.quantum = quantum
        self.slack = slack

    def _build(self, scn: MacScenario) -> RateRegion:
        if self.kind not in _BUILDERS:
            raise ValidationError(f"kind must be one of {sorted(_BUILDERS)}, got {self.kind!r}")
        return _BUILDERS[self.kind](scn)


class ReceiverRegion(_RegionEstimator):
    """Per-mode rate region of one of the four OPA-based receivers."""

    def __init__(
        self,
        kind: str = "serial-pcr",
        gains=None,
        n_r: int = 1,
        split=None,
        stats: str = "gaussian",
        quantum: bool = False,
        slack: float = 0.0,
    ):
        self.kind = kind
        self.gains = gains
        self.n_r = n_r
        self.split = split
        self.stats = stats
        self.quantum = quantum
        self.slack = slack

    def _build(self, scn: MacScenario) -> RateRegion:
        cfg = ReceiverConfig(
            self.kind,
            None if self.gains is None else tuple(self.gains),
            self.n_r,
            None if self.split is None else tuple(self.split),
            self.stats,
        )
        return receiver_rate_region(scn, cfg)
