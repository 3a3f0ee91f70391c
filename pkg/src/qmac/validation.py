"""Self-check suite: independent oracles and invariants with measured deviations."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import closed_forms
from .circuit import (
    OPA,
    AddThermal,
    AddVacuum,
    BeamSplitter,
    CircuitElement,
    Discard,
    Loss,
    MacScenario,
    Phase,
    mac_circuit,
    run_circuit,
)
from .exceptions import QmacError
from .fock import fock_oracle
from .gaussian import GaussianState, g, von_neumann_entropy
from .receivers import ReceiverConfig, front_end_for_phases, receiver_plan, receiver_rate_region
from .regions import (
    all_masks,
    classical_outer_region,
    coherent_region,
    ea_capacity_single,
    ea_outer_region,
    mask_members,
    subset_mask,
    tmsv_region,
)
from .scenarios import REGION_SCENARIOS
from .statistics import joint_counts_from_state


@dataclass
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0


def _g_reference(x: float) -> float:
    # independent transcription of the thermal entropy in bits
    if x == 0:
        return 0.0
    return (x + 1) * math.log2(x + 1) - x * math.log2(x)


def check_g_values() -> tuple[float, str]:
    xs = [1e-6, 1e-3, 0.01, 0.5, 1.0, 20.0, 1e4]
    dev = max(abs(float(g(x)) - _g_reference(x)) / max(1.0, _g_reference(x)) for x in xs)
    return dev, f"{len(xs)} points"


def check_ce_reduction() -> tuple[float, str]:
    """Noiseless lossless EA capacity equals twice the source entropy."""
    grid = np.logspace(-4, 1, 21)
    dev = max(abs(ea_capacity_single(float(n), 1.0, 0.0) - 2 * _g_reference(float(n))) for n in grid)
    return dev, "N_S in [1e-4, 10]"


def check_tmsv_single() -> tuple[float, str]:
    params = [(0.01, 0.01, 20.0), (1e-3, 1e-3, 1e4), (0.5, 0.3, 0.1), (2.0, 0.9, 1.0)]
    dev = 0.0
    for n_s, tau, n_b in params:
        scn = MacScenario((1.0,), tau, n_b, (n_s,))
        dev = max(dev, abs(tmsv_region(scn).bounds[1] - ea_capacity_single(n_s, tau, n_b)))
    return dev, f"{len(params)} channels"


def _random_two_sender(rng: np.random.Generator) -> tuple[MacScenario, float, float, list[float]]:
    ns = rng.uniform(0.001, 0.2, 2)
    eta = float(rng.uniform(0.1, 0.9))
    scn = MacScenario((eta, 1 - eta), float(rng.uniform(0.01, 0.9)), float(rng.uniform(0, 5)), tuple(ns))
    g1, g2 = (float(x) for x in rng.uniform(1.0, 3.0, 2))
    phases = [float(x) for x in rng.uniform(0, 2 * math.pi, 2)]
    return scn, g1, g2, phases


def closed_form_deviation(kind: str, scn: MacScenario, g1: float, g2: float, phases) -> float:
    """Largest |engine - closed form| over the constants of one front end."""
    cfg = ReceiverConfig(kind, (g1, g2))
    n = front_end_for_phases(scn, cfg, phases).moments().n
    ns1, ns2 = scn.n_s
    cp1 = closed_forms.signal_idler_correlation(ns1, phases[0])
    cp2 = closed_forms.signal_idler_correlation(ns2, phases[1])
    args = (ns1, ns2, scn.eta[0], scn.tau, scn.n_b, g1, g2, cp1, cp2)
    if kind == "serial-pcr":
        ref = closed_forms.serial_pcr(*args)
        eng = {
            "a1": n[0, 0], "s1": n[1, 1], "c1": n[1, 0],
            "a3": n[2, 0], "s3": n[3, 1], "c31": n[3, 0], "c32": n[2, 1],
            "a2": n[2, 2], "s2": n[3, 3], "c2": n[3, 2],
        }
    else:
        fn = closed_forms.serial_opar if kind == "serial-opar" else closed_forms.parallel_opar
        ref = fn(*args)
        eng = {"a": n[0, 0], "s": n[1, 1], "c": n[1, 0]}
    return max(abs(complex(eng[k]) - complex(ref[k])) for k in ref)


def check_closed_forms(draws: int = 10, seed: int = 7) -> tuple[float, str]:
    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(draws):
        scn, g1, g2, ph = _random_two_sender(rng)
        for kind in ("serial-opar", "parallel-opar", "serial-pcr"):
            dev = max(dev, closed_form_deviation(kind, scn, g1, g2, ph))
    return dev, f"{draws} draws x 3 receivers"


def random_small_circuit(rng: np.random.Generator, limit: float = 0.2) -> list[CircuitElement]:
    """Two-mode TMSV source, loss, amplification, mixing; parameters <= ``limit``."""
    n_s = float(rng.uniform(0, limit))
    tau = float(rng.uniform(0.5, 1.0 - 1e-3))
    n_b = float(rng.uniform(0, limit)) * (1 - tau)
    gain = 1.0 + float(rng.uniform(0, limit))
    return [
        OPA(1.0 + n_s, 0, 1),
        Phase(float(rng.uniform(0, 2 * math.pi)), 0),
        Loss(tau, n_b, 0),
        OPA(gain, 0, 1),
        BeamSplitter(float(rng.uniform(0, 1)), 0, 1),
    ]


def check_fock_moments(draws: int, cutoff: int, seed: int = 11) -> tuple[float, str]:
    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(draws):
        circ = random_small_circuit(rng)
        fk = fock_oracle(circ, cutoff=cutoff, n_modes=2).moments()
        ga = run_circuit(circ, GaussianState.vacuum(2)).moments()
        dev = max(dev, float(np.max(np.abs(fk.n - ga.n))), float(np.max(np.abs(fk.m - ga.m))))
    return dev, f"{draws} circuits at cutoff {cutoff}"


def check_fock_entropy(cutoff: int) -> tuple[float, str]:
    cases: list[tuple[list[CircuitElement], int]] = [
        ([AddThermal(0.1), Discard(0)], 1),
        ([OPA(1.05, 0, 1), Discard(1)], 2),
        (mac_circuit(MacScenario((1.0,), 0.7, 0.03, (0.05,))), 2),
    ]
    dev = 0.0
    for circ, m in cases:
        fk = fock_oracle(circ, cutoff=cutoff, n_modes=m)
        ga = run_circuit(circ, GaussianState.vacuum(m))
        dev = max(dev, abs(fk.entropy() - von_neumann_entropy(ga)))
    return dev, f"{len(cases)} states"


def _receiver_fock_case(kind: str, scn: MacScenario, gains, message, cutoff: int) -> float:
    """Total variation between Fock and Gaussian joint counts of one front end."""
    cfg = ReceiverConfig(kind, gains)
    plan = receiver_plan(kind, scn.s, gains, scn.eta)
    phases = [math.pi * b for b in message]
    base = mac_circuit(scn, phases)
    circ = base + plan.circuit
    fk = fock_oracle(circ, cutoff=cutoff, n_modes=2 * scn.s, max_deficit=1e-9)
    # Fock visible modes follow the Gaussian layout; pick the detected pair
    counts = fk.counts()
    keep = plan.detected[:2]
    axes = tuple(k for k in range(counts.ndim) if k not in keep)
    pair = counts.sum(axis=axes) if axes else counts
    if keep[0] > keep[1]:
        pair = pair.T
    state = front_end_for_phases(scn, cfg, phases)
    jd = joint_counts_from_state(state, (0, 1), tail=1e-14)
    ref = np.zeros((max(cutoff, jd.probs.shape[0]), max(cutoff, jd.probs.shape[1])))
    ref[: jd.probs.shape[0], : jd.probs.shape[1]] = jd.probs
    fpad = np.zeros_like(ref)
    fpad[:cutoff, :cutoff] = pair
    return 0.5 * float(np.abs(ref - fpad).sum())


def check_fock_counts(fast: bool) -> tuple[float, str]:
    cases = [
        ("serial-pcr", MacScenario((1.0,), 0.7, 0.02, (0.05,)), (1.08,), (0,), 14),
        ("serial-pcr", MacScenario((1.0,), 0.7, 0.02, (0.05,)), (1.08,), (1,), 14),
    ]
    if not fast:
        two = MacScenario((0.4, 0.6), 0.7, 0.02, (0.04, 0.05))
        cases += [
            ("serial-opar", two, (1.05, 1.04), (0, 1), 11),
            ("parallel-opar", two, (1.05, 1.04), (1, 0), 10),
        ]
    dev = max(_receiver_fock_case(*c) for c in cases)
    return dev, f"{len(cases)} front ends"


def _chain_failures(scn: MacScenario) -> list[str]:
    fails = []
    coh, cout = coherent_region(scn), classical_outer_region(scn)
    tm, eo = tmsv_region(scn), ea_outer_region(scn)
    if not coh.within(cout, 1e-12):
        fails.append("coherent not within classical-outer")
    if not tm.within(eo, 1e-9):
        fails.append("tmsv not within ea-outer")
    for reg in (coh, cout, tm, eo):
        if not reg.is_monotone():
            fails.append(f"{reg.label} not monotone")
    order = list(range(scn.s))[::-1]
    perm = tmsv_region(scn.permuted(order))
    for m in all_masks(scn.s):
        pm = subset_mask(order.index(k) for k in mask_members(m, scn.s))
        # relative agreement plus the roundoff floor of entropy differences
        if abs(perm.bounds[pm] - tm.bounds[m]) > 1e-8 * tm.bounds[m] + 1e-14:
            fails.append("tmsv not permutation equivariant")
            break
    return fails


def check_region_chains() -> tuple[float, str]:
    fails = []
    for name, scn in REGION_SCENARIOS.items():
        fails += [f"{name}: {f}" for f in _chain_failures(scn)]
    return float(len(fails)), "; ".join(fails) or f"{len(REGION_SCENARIOS)} scenarios"


def check_receiver_containment(fast: bool) -> tuple[float, str]:
    scn = MacScenario((0.5, 0.5), 0.01, 20.0, (0.01, 0.01))
    tm = tmsv_region(scn)
    worst = -math.inf
    kinds = ("serial-pcr",) if fast else ("serial-opar", "serial-pcr", "parallel-opar", "parallel-pcr")
    for kind in kinds:
        reg = receiver_rate_region(scn, ReceiverConfig(kind, n_r=20_000))
        worst = max(worst, max(reg.bounds[m] - tm.bounds[m] for m in reg.bounds))
    return max(worst, 0.0), f"{len(kinds)} receivers, excess over tmsv"


def run_checks(fast: bool = False, cutoff: int | None = None) -> list[CheckResult]:
    """Run every check; ``cutoff`` overrides the Fock truncation of oracle checks."""
    fock_cut = cutoff if cutoff is not None else 28
    ent_cut = cutoff if cutoff is not None else 24
    checks: list[tuple[str, Callable[[], tuple[float, str]], float]] = [
        ("g-values", check_g_values, 1e-12),
        ("ea-capacity-reduction", check_ce_reduction, 1e-12),
        ("tmsv-single-sender", check_tmsv_single, 1e-10),
        ("closed-form-moments", lambda: check_closed_forms(4 if fast else 10), 1e-10),
        ("fock-moments", lambda: check_fock_moments(2 if fast else 6, fock_cut), 1e-8),
        ("fock-entropy", lambda: check_fock_entropy(ent_cut), 1e-6),
        ("fock-joint-counts", lambda: check_fock_counts(fast), 1e-8),
        ("region-chains", check_region_chains, 0.0),
        ("receiver-within-tmsv", lambda: check_receiver_containment(fast), 1e-9),
    ]
    if cutoff is not None:
        checks[6] = ("fock-joint-counts", lambda: _forced_cutoff_counts(cutoff), 1e-8)
    out = []
    for name, fn, tol in checks:
        t0 = time.perf_counter()
        try:
            dev, detail = fn()
            ok = dev <= tol
        except QmacError as exc:
            dev, detail, ok = math.inf, f"{type(exc).__name__}: {exc}", False
        out.append(CheckResult(name, ok, dev, tol, detail, time.perf_counter() - t0))
    return out


def _forced_cutoff_counts(cutoff: int) -> tuple[float, str]:
    circ = mac_circuit(MacScenario((1.0,), 0.7, 0.02, (0.05,)))
    circ = circ + [AddVacuum(), OPA(1.08, 0, 2), BeamSplitter(0.5, 2, 1)]
    fock_oracle(circ, cutoff=cutoff, n_modes=2)
    return 0.0, f"cutoff {cutoff}"


def format_report(results: list[CheckResult]) -> str:
    lines = [f"{'check':<24} {'status':<6} {'deviation':>12} {'tolerance':>10}  detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{r.name:<24} {status:<6} {r.deviation:>12.3e} {r.tolerance:>10.1e}  "
            f"{r.detail} ({r.seconds:.2f}s)"
        )
    return "\n".join(lines)
