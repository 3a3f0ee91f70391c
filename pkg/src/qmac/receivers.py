"""Optical receivers for BPSK-over-TMSV and their achievable rate regions.

After the channel the modes are ``(B, A'_1, ..., A'_s)``. Every sender ``k``
encodes a bit by a phase ``0`` or ``pi`` on its signal. Four receivers are
built on top of that state:

* ``serial-opar``: OPA ``k`` joins the running received mode with idler ``k``;
  idler outputs are counted.
* ``serial-pcr``: a phase conjugator on the running received mode produces a
  conjugate ``C_k`` that interferes with idler ``k`` on a balanced
  beamsplitter; the two output counts are subtracted.
* ``parallel-opar``: the received mode is first tapped into ``s`` branches,
  one OPA per branch.
* ``parallel-pcr``: one conjugator, its conjugate output tapped into ``s``
  branches, each interfered with its idler.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import (
    OPA,
    AddVacuum,
    BeamSplitter,
    CircuitElement,
    MacScenario,
    mac_output_state,
    run_circuit,
)
from .exceptions import ValidationError
from .gaussian import GaussianState
from .regions import RateRegion, all_masks, mask_members
from .statistics import (
    conditional_shannon_mi,
    count_model,
    joint_counts_from_state,
    total_counts_over_copies,
    wick_diff_model,
)

KINDS = ("serial-opar", "serial-pcr", "parallel-opar", "parallel-pcr")
STATS = ("gaussian", "exact")

# acceptable total-count truncation per codeword
CODEWORD_TAIL = 1e-11


@dataclass(frozen=True)
class ReceiverConfig:
    """Receiver settings; ``None`` gains or split select the defaults."""

    kind: str
    gains: tuple[float, ...] | None = None
    n_r: int = 1
    split: tuple[float, ...] | None = None
    stats: str = "gaussian"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"receiver kind must be one of {KINDS}, got {self.kind!r}")
        if self.stats not in STATS:
            raise ValidationError(f"stats must be one of {STATS}, got {self.stats!r}")
        if self.stats == "exact" and self.kind.endswith("pcr"):
            raise ValidationError("PCR receivers support Gaussian statistics only")
        n_r = self.n_r
        if isinstance(n_r, float) and n_r.is_integer():
            n_r = int(n_r)
        if not isinstance(n_r, (int, np.integer)) or isinstance(n_r, bool) or n_r < 1:
            raise ValidationError(f"n_r must be a positive integer, got {self.n_r!r}")
        object.__setattr__(self, "n_r", int(n_r))
        if self.gains is not None:
            gains = tuple(float(x) for x in self.gains)
            if any(not x >= 1.0 for x in gains):
                raise ValidationError(f"gains must be >= 1, got {gains}")
            object.__setattr__(self, "gains", gains)
        if self.split is not None:
            split = tuple(float(x) for x in self.split)
            if any(not 0.0 <= x <= 1.0 for x in split) or abs(sum(split) - 1.0) > 1e-12:
                raise ValidationError(f"split ratios must lie in [0, 1] and sum to 1, got {split}")
            object.__setattr__(self, "split", split)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "gains": None if self.gains is None else list(self.gains),
            "n_r": self.n_r,
            "split": None if self.split is None else list(self.split),
            "stats": self.stats,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReceiverConfig":
        known = {"kind", "gains", "n_r", "split", "stats"}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown receiver fields {sorted(extra)}")
        kw = dict(d)
        for key in ("gains", "split"):
            if kw.get(key) is not None:
                kw[key] = tuple(kw[key])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ValidationError(f"bad receiver config {d!r}: {exc}") from exc


def literal_opar_gains(scn: MacScenario) -> tuple[float, ...]:
    """``sqrt(N_S,k) / sqrt(N_B (1 + N_B))`` without the leading one (below 1)."""
    if scn.n_b == 0:
        return tuple(math.inf for _ in scn.n_s)
    return tuple(math.sqrt(n) / math.sqrt(scn.n_b * (1.0 + scn.n_b)) for n in scn.n_s)


# PCR gains quoted for the two standard noise levels
_PCR_QUOTED = {20.0: 2.0, 1e4: 1.0 + 1e-3}


def default_gains(kind: str, scn: MacScenario) -> tuple[float, ...]:
    """Default amplifier gains per sender.

    OPAR uses ``1 + sqrt(N_S,k) / sqrt(N_B (1 + N_B))``. PCR saturates once
    ``(G - 1) N_B`` dominates ``N_S``: the quoted gains are used at
    ``N_B = 20`` and ``1e4``, elsewhere ``G - 1 = 100 N_S / N_B`` (``G = 2``
    noiseless). The single conjugator of ``parallel-pcr`` is sized by the
    brightest sender.
    """
    if kind not in KINDS:
        raise ValidationError(f"receiver kind must be one of {KINDS}, got {kind!r}")
    if kind.endswith("opar"):
        if scn.n_b == 0:
            raise ValidationError("the default OPAR gain needs n_b > 0; pass gains explicitly")
        return tuple(1.0 + x for x in literal_opar_gains(scn))
    if scn.n_b in _PCR_QUOTED:
        gains = [_PCR_QUOTED[scn.n_b]] * scn.s
    elif scn.n_b == 0:
        gains = [2.0] * scn.s
    else:
        gains = [1.0 + 100.0 * n / scn.n_b for n in scn.n_s]
    if kind == "parallel-pcr":
        gains = [max(gains)] * scn.s
    return tuple(gains)


def bpsk_phases(message: Sequence[int]) -> list[float]:
    return [math.pi if b else 0.0 for b in message]


@dataclass(frozen=True)
class ReceiverPlan:
    """Circuit on ``(B, A'_1..A'_s)`` plus what to detect.

    ``detected`` lists the measured modes in output order; for PCR
    consecutive entries form ``(X_k, Y_k)`` pairs.
    """

    circuit: list[CircuitElement] = field(default_factory=list)
    detected: list[int] = field(default_factory=list)


def _tap_cascade(
    start: int, split: Sequence[float], n_modes: int
) -> tuple[list[CircuitElement], list[int], int]:
    """Split mode ``start`` into branches with power fractions ``split``."""
    circ: list[CircuitElement] = []
    branches = []
    rem_mode, rem = start, 1.0
    for frac in split[:-1]:
        circ.append(AddVacuum())
        v = n_modes
        n_modes += 1
        t = 1.0 if rem <= 0 else min(1.0, frac / rem)
        circ.append(BeamSplitter(t, rem_mode, v))
        branches.append(rem_mode)
        rem_mode, rem = v, rem - frac
    branches.append(rem_mode)
    return circ, branches, n_modes


def receiver_plan(kind: str, s: int, gains: Sequence[float], split: Sequence[float]) -> ReceiverPlan:
    if len(gains) != s:
        raise ValidationError(f"need {s} gains, got {len(gains)}")
    if len(split) != s:
        raise ValidationError(f"need {s} split ratios, got {len(split)}")
    n_modes = s + 1
    circ: list[CircuitElement] = []
    det: list[int] = []
    if kind == "serial-opar":
        circ = [OPA(gains[k], 0, k + 1) for k in range(s)]
        det = [k + 1 for k in range(s)]
    elif kind == "serial-pcr":
        for k in range(s):
            v = n_modes
            n_modes += 1
            circ += [AddVacuum(), OPA(gains[k], 0, v), BeamSplitter(0.5, v, k + 1)]
            det += [v, k + 1]
    elif kind == "parallel-opar":
        circ, branches, n_modes = _tap_cascade(0, split, n_modes)
        circ += [OPA(gains[k], branches[k], k + 1) for k in range(s)]
        det = [k + 1 for k in range(s)]
    elif kind == "parallel-pcr":
        if len(set(gains)) != 1:
            raise ValidationError("parallel-pcr uses one conjugator; all gains must be equal")
        conj = n_modes
        circ = [AddVacuum(), OPA(gains[0], 0, conj)]
        taps, branches, n_modes = _tap_cascade(conj, split, n_modes + 1)
        circ += taps
        for k in range(s):
            circ.append(BeamSplitter(0.5, branches[k], k + 1))
            det += [branches[k], k + 1]
    else:
        raise ValidationError(f"unknown receiver kind {kind!r}")
    return ReceiverPlan(circ, det)


def resolved_gains(cfg: ReceiverConfig, scn: MacScenario) -> tuple[float, ...]:
    gains = cfg.gains if cfg.gains is not None else default_gains(cfg.kind, scn)
    if len(gains) != scn.s:
        raise ValidationError(f"config has {len(gains)} gains for {scn.s} senders")
    return tuple(gains)


def resolved_split(cfg: ReceiverConfig, scn: MacScenario) -> tuple[float, ...]:
    split = cfg.split if cfg.split is not None else scn.eta
    if len(split) != scn.s:
        raise ValidationError(f"config has {len(split)} split ratios for {scn.s} senders")
    return tuple(split)


def receiver_front_end(
    scn: MacScenario, cfg: ReceiverConfig, message: Sequence[int]
) -> GaussianState:
    """State of the photodetected modes for one BPSK message."""
    if len(message) != scn.s or any(b not in (0, 1) for b in message):
        raise ValidationError(f"message must be {scn.s} bits, got {message!r}")
    return front_end_for_phases(scn, cfg, bpsk_phases(message))


def front_end_for_phases(
    scn: MacScenario, cfg: ReceiverConfig, phases: Sequence[float]
) -> GaussianState:
    """Detected-mode state for arbitrary encoding phases."""
    plan = receiver_plan(cfg.kind, scn.s, resolved_gains(cfg, scn), resolved_split(cfg, scn))
    state = mac_output_state(scn, phases)
    return run_circuit(plan.circuit, state).reduced(plan.detected)


def message_family(scn: MacScenario, cfg: ReceiverConfig) -> dict:
    """Outcome model of every message: Gaussian statistic or exact totals."""
    family = {}
    for msg in itertools.product((0, 1), repeat=scn.s):
        st = receiver_front_end(scn, cfg, msg)
        if cfg.kind.endswith("pcr"):
            pairs = [(2 * k, 2 * k + 1) for k in range(scn.s)]
            family[msg] = wick_diff_model(st, pairs, cfg.n_r, msg)
        elif cfg.stats == "gaussian":
            family[msg] = count_model(st, list(range(scn.s)), cfg.n_r, msg)
        else:
            if scn.s != 2:
                raise ValidationError("exact OPAR statistics are implemented for two senders")
            per_copy = joint_counts_from_state(
                st, (0, 1), tail=CODEWORD_TAIL / (2.0 * cfg.n_r), message=msg
            )
            family[msg] = total_counts_over_copies(per_copy, cfg.n_r)
    return family


def receiver_rate_region(scn: MacScenario, cfg: ReceiverConfig) -> RateRegion:
    """Per-mode rates ``I(M[J]; outcome | M[J^c]) / N_R`` for every subset ``J``."""
    family = message_family(scn, cfg)
    bounds, per_codeword = {}, {}
    for m in all_masks(scn.s):
        mi = conditional_shannon_mi(family, mask_members(m, scn.s))
        per_codeword[m] = mi
        bounds[m] = mi / cfg.n_r
    meta = {
        "kind": cfg.kind,
        "stats": cfg.stats,
        "n_r": cfg.n_r,
        "gains": list(resolved_gains(cfg, scn)),
        "split": list(resolved_split(cfg, scn)),
        "codeword_mi_bits": {str(m): v for m, v in per_codeword.items()},
        "gaussian_model_includes_mean": True,
    }
    if cfg.kind.endswith("opar") and scn.n_b > 0:
        meta["literal_gain_formula"] = list(literal_opar_gains(scn))
    if cfg.stats == "exact":
        meta["total_count_mass_deficit"] = max(d.mass_deficit for d in family.values())
    return RateRegion(scn.s, bounds, "receiver", meta)
