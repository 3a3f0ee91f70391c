"""Command-line front end: ``qmac run``, ``qmac validate`` and ``qmac version``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .circuit import MacScenario
from .exceptions import CutoffError, PhysicalityError, QmacError, ResourceError, ValidationError
from .receivers import ReceiverConfig, receiver_rate_region
from .regions import (
    RateRegion,
    classical_outer_region,
    coherent_region,
    ea_outer_region,
    region_geometry,
    tmsv_region,
)
from .scenarios import REGION_SCENARIOS, snr_repetitions

SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "svg")
SWEEP_PARAMS = ("n_s", "n_b", "tau", "n_r")
REGION_BUILDERS = {
    "coherent": coherent_region,
    "classical-outer": classical_outer_region,
    "ea-outer": ea_outer_region,
    "tmsv": tmsv_region,
}

EXIT_OK, EXIT_CHECK_FAILED, EXIT_VALIDATION, EXIT_PHYSICALITY = 0, 1, 2, 3

ADOPTED_READINGS = {
    "opar_gain": (
        "OPAR gains default to 1 + sqrt(N_S,k) / sqrt(N_B (1 + N_B)); the bare ratio "
        "is reported per run as literal_gain_formula"
    ),
    "pcr_gain": (
        "PCR gains default to 2 at N_B = 20 and 1 + 1e-3 at N_B = 1e4, otherwise "
        "1 + 100 N_S,k / N_B; parallel-pcr shares one conjugator sized by the brightest sender"
    ),
    "parallel_split": "parallel receivers tap the received mode in the ratio eta unless split is given",
    "gaussian_mean": (
        "Gaussian outcome models keep the message-dependent mean of the count statistic; "
        "a zero-mean model carries no BPSK information"
    ),
    "exact_opar": (
        "exact OPAR statistics use the per-arm total counts over the N_R copies of a codeword"
    ),
    "snr_constraint": "the fixed-SNR sweep constraint sets N_R = round(snr N_B / (tau N_S,1))",
    "quantum_rates": "the quantum flag halves every bound",
}


def fmt(x: float) -> str:
    """Deterministic 17-significant-digit rendering."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class SeriesSpec:
    """One curve of a sweep: a capacity region or a receiver region."""

    label: str
    region: str | None = None
    receiver: ReceiverConfig | None = None


@dataclass(frozen=True)
class SweepTask:
    name: str
    parameter: str
    grid: tuple[float, ...]
    series: tuple[SeriesSpec, ...]
    ratios: tuple[float, ...] = (math.inf, 1.0)
    snr: float | None = None


@dataclass(frozen=True)
class RegionTask:
    regions: tuple[str, ...] = ()
    receivers: tuple[tuple[str, ReceiverConfig], ...] = ()


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "qmac-out"
    formats: tuple[str, ...] = ("csv", "json")
    normalize: bool = False
    quantum: bool = False


@dataclass(frozen=True)
class RunConfig:
    scenario: MacScenario
    regions: RegionTask
    sweeps: tuple[SweepTask, ...]
    output: OutputSpec
    raw: dict = field(default_factory=dict, compare=False)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _check_keys(d: Any, allowed: set[str], where: str) -> None:
    _require(isinstance(d, dict), f"{where} must be a JSON object")
    extra = set(d) - allowed
    _require(not extra, f"unknown fields in {where}: {sorted(extra)}")


def parse_scenario(d: Any) -> MacScenario:
    if isinstance(d, str):
        _require(d in REGION_SCENARIOS, f"unknown scenario preset {d!r}")
        return REGION_SCENARIOS[d]
    _check_keys(d, {"preset", "eta", "tau", "n_b", "n_s"}, "scenario")
    if "preset" in d:
        _require(len(d) == 1, "a scenario preset cannot be combined with explicit fields")
        return parse_scenario(d["preset"])
    missing = {"eta", "tau", "n_b", "n_s"} - set(d)
    _require(not missing, f"scenario is missing {sorted(missing)}")
    try:
        return MacScenario(tuple(d["eta"]), float(d["tau"]), float(d["n_b"]), tuple(d["n_s"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad scenario {d!r}: {exc}") from exc


def _parse_grid(d: Any) -> tuple[float, ...]:
    if isinstance(d, dict):
        _check_keys(d, {"logspace", "linspace"}, "grid")
        _require(len(d) == 1, "grid takes exactly one of logspace or linspace")
        (kind, args), = d.items()
        _require(
            isinstance(args, list) and len(args) == 3 and int(args[2]) == args[2] and args[2] >= 1,
            f"{kind} grid needs [start, stop, count]",
        )
        lo, hi, n = float(args[0]), float(args[1]), int(args[2])
        if kind == "logspace":
            _require(lo > 0 and hi > 0, "logspace endpoints must be positive")
            pts = np.geomspace(lo, hi, n)
        else:
            pts = np.linspace(lo, hi, n)
        grid = tuple(float(x) for x in pts)
    else:
        _require(isinstance(d, list), "grid must be a list or a logspace/linspace object")
        try:
            grid = tuple(float(x) for x in d)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"grid values must be numbers: {exc}") from exc
    _require(len(grid) > 0, "sweep grid must be nonempty")
    _require(all(math.isfinite(x) for x in grid), "sweep grid values must be finite")
    diffs = np.diff(grid)
    _require(
        bool(np.all(diffs > 0) or np.all(diffs < 0)), "sweep grid must be strictly monotone"
    )
    return grid


def _parse_ratio(r: Any) -> float:
    if isinstance(r, str) and r.lower() in ("inf", "infinity"):
        return math.inf
    try:
        v = float(r)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad rate ratio {r!r}") from exc
    _require(v >= 0, f"rate ratio must be >= 0, got {r!r}")
    return v


def _receiver_label(cfg: ReceiverConfig) -> str:
    return cfg.kind if cfg.stats == "gaussian" else f"{cfg.kind}-{cfg.stats}"


def _parse_receiver(d: Any) -> tuple[str, ReceiverConfig]:
    _require(isinstance(d, dict), "receiver entries must be JSON objects")
    d = dict(d)
    label = d.pop("label", None)
    cfg = ReceiverConfig.from_dict(d)
    return (label or _receiver_label(cfg)), cfg


def _parse_series(d: Any) -> SeriesSpec:
    if isinstance(d, str):
        d = {"region": d}
    _check_keys(d, {"label", "region", "receiver"}, "sweep series")
    _require(("region" in d) != ("receiver" in d), "a series needs exactly one of region or receiver")
    if "region" in d:
        _require(d["region"] in REGION_BUILDERS, f"unknown region {d['region']!r}")
        return SeriesSpec(d.get("label", d["region"]), region=d["region"])
    label, cfg = _parse_receiver(d["receiver"])
    return SeriesSpec(d.get("label", label), receiver=cfg)


def _parse_sweep(d: Any, name: str, scn: MacScenario) -> SweepTask:
    _check_keys(d, {"type", "name", "parameter", "grid", "series", "ratios", "constraint"}, "sweep")
    _require(d.get("parameter") in SWEEP_PARAMS, f"sweep parameter must be one of {SWEEP_PARAMS}")
    _require("grid" in d, "sweep needs a grid")
    grid = _parse_grid(d["grid"])
    series = d.get("series", [])
    _require(isinstance(series, list) and series, "sweep needs a nonempty series list")
    specs = tuple(_parse_series(x) for x in series)
    labels = [x.label for x in specs]
    _require(len(set(labels)) == len(labels), f"duplicate series labels {labels}")
    ratios = tuple(_parse_ratio(r) for r in d.get("ratios", ["inf", 1]))
    _require(len(ratios) > 0, "ratios must be nonempty")
    _require(scn.s >= 2 or ratios == (math.inf,) or all(math.isinf(r) for r in ratios),
             "rate ratios need at least two senders")
    snr = None
    if "constraint" in d:
        c = d["constraint"]
        _check_keys(c, {"snr"}, "sweep constraint")
        _require("snr" in c, "constraint needs snr")
        snr = float(c["snr"])
        _require(snr > 0, "snr must be positive")
        _require(d["parameter"] != "n_r", "an snr constraint fixes n_r; sweep another parameter")
    if d["parameter"] == "n_r":
        _require(all(x >= 1 and float(x).is_integer() for x in grid), "n_r grid must hold positive integers")
    if d["parameter"] in ("n_s", "n_b"):
        _require(all(x >= 0 for x in grid), f"{d['parameter']} grid must be nonnegative")
    if d["parameter"] == "tau":
        _require(all(0 <= x <= 1 for x in grid), "tau grid must lie in [0, 1]")
    return SweepTask(d.get("name", name), d["parameter"], grid, specs, ratios, snr)


def parse_config(raw: Any) -> RunConfig:
    _check_keys(raw, {"schema", "scenario", "tasks", "output"}, "config")
    _require(raw.get("schema", SCHEMA_VERSION) == SCHEMA_VERSION,
             f"unsupported config schema {raw.get('schema')!r}; expected {SCHEMA_VERSION}")
    _require("scenario" in raw, "config needs a scenario")
    scn = parse_scenario(raw["scenario"])
    tasks = raw.get("tasks", [])
    _require(isinstance(tasks, list), "tasks must be a list")
    regions: list[str] = []
    receivers: list[tuple[str, ReceiverConfig]] = []
    sweeps: list[SweepTask] = []
    for i, t in enumerate(tasks):
        _require(isinstance(t, dict) and "type" in t, f"task {i} needs a type")
        kind = t["type"]
        if kind == "regions":
            _check_keys(t, {"type", "regions"}, "regions task")
            names = t.get("regions", list(REGION_BUILDERS))
            for n in names:
                _require(n in REGION_BUILDERS, f"unknown region {n!r}")
            regions += [n for n in names if n not in regions]
        elif kind == "receivers":
            _check_keys(t, {"type", "receivers"}, "receivers task")
            _require(isinstance(t.get("receivers"), list), "receivers task needs a receivers list")
            receivers += [_parse_receiver(r) for r in t["receivers"]]
        elif kind == "sweep":
            name = "sweep" if not sweeps else f"sweep-{len(sweeps) + 1}"
            sweeps.append(_parse_sweep(t, name, scn))
        else:
            raise ValidationError(f"unknown task type {kind!r}")
    labels = regions + [lab for lab, _ in receivers]
    _require(len(set(labels)) == len(labels), f"duplicate region labels {labels}")
    names = [sw.name for sw in sweeps]
    _require(len(set(names)) == len(names), f"duplicate sweep names {names}")
    out = raw.get("output", {})
    _check_keys(out, {"dir", "formats", "normalize", "quantum"}, "output")
    formats = tuple(out.get("formats", ["csv", "json"]))
    bad = [f for f in formats if f not in FORMATS]
    _require(not bad, f"output formats must come from {FORMATS}, got {bad}")
    for flag in ("normalize", "quantum"):
        _require(isinstance(out.get(flag, False), bool), f"output.{flag} must be true or false")
    output = OutputSpec(
        str(out.get("dir", "qmac-out")),
        formats,
        bool(out.get("normalize", False)),
        bool(out.get("quantum", False)),
    )
    return RunConfig(scn, RegionTask(tuple(regions), tuple(receivers)), tuple(sweeps), output, raw)


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------- evaluation


def _swept_scenario(scn: MacScenario, parameter: str, value: float) -> MacScenario:
    if parameter == "n_s":
        return dataclasses.replace(scn, n_s=tuple(value for _ in scn.n_s))
    if parameter == "n_b":
        return dataclasses.replace(scn, n_b=value)
    if parameter == "tau":
        return dataclasses.replace(scn, tau=value)
    return scn


def _evaluate(job: tuple) -> RateRegion:
    """Worker entry point: one region for one scenario."""
    scn, region, receiver = job
    if region is not None:
        return REGION_BUILDERS[region](scn)
    return receiver_rate_region(scn, receiver)


def _run_jobs(jobs: list[tuple], workers: int) -> list[RateRegion]:
    if workers <= 1 or len(jobs) <= 1:
        return [_evaluate(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_evaluate, jobs))


def _sweep_jobs(cfg: RunConfig, sw: SweepTask) -> list[tuple]:
    jobs = []
    for value in sw.grid:
        scn = _swept_scenario(cfg.scenario, sw.parameter, value)
        for item in sw.series:
            rx = item.receiver
            if rx is not None:
                if sw.snr is not None:
                    rx = dataclasses.replace(rx, n_r=snr_repetitions(scn.tau, scn.n_s[0], scn.n_b, sw.snr))
                elif sw.parameter == "n_r":
                    rx = dataclasses.replace(rx, n_r=int(value))
            jobs.append((scn, item.region, rx))
        jobs.append((scn, "coherent", None))
    return jobs


def _direction(ratio: float, s: int) -> np.ndarray:
    d = np.zeros(s)
    if math.isinf(ratio):
        d[0] = 1.0
    else:
        d[0] = ratio
        d[1:] = 1.0
    return d


def _ratio_text(r: float) -> str:
    return "inf" if math.isinf(r) else fmt(r)


@dataclass
class RunResult:
    regions: list[RateRegion]
    region_labels: list[str]
    sweep_rows: dict[str, list[tuple]]
    sweep_meta: dict[str, list[dict]]
    coherent: RateRegion


def _apply_output(region: RateRegion, out: OutputSpec) -> RateRegion:
    return region.quantum() if out.quantum else region


def execute(cfg: RunConfig, workers: int = 1) -> RunResult:
    scn = cfg.scenario
    jobs = [(scn, r, None) for r in cfg.regions.regions]
    jobs += [(scn, None, rx) for _, rx in cfg.regions.receivers]
    sweep_jobs = [_sweep_jobs(cfg, sw) for sw in cfg.sweeps]
    flat = jobs + [j for js in sweep_jobs for j in js]
    results = _run_jobs(flat, workers)
    head, rest = results[: len(jobs)], results[len(jobs) :]
    regions = [_apply_output(r, cfg.output) for r in head]
    labels = list(cfg.regions.regions) + [lab for lab, _ in cfg.regions.receivers]
    rows: dict[str, list[tuple]] = {}
    meta: dict[str, list[dict]] = {}
    pos = 0
    for sw, js in zip(cfg.sweeps, sweep_jobs):
        chunk = rest[pos : pos + len(js)]
        pos += len(js)
        rows[sw.name], meta[sw.name] = [], []
        per_point = len(sw.series) + 1
        for i, value in enumerate(sw.grid):
            block = chunk[i * per_point : (i + 1) * per_point]
            coh1 = block[-1].singletons[0]
            for item, reg in zip(sw.series, block[:-1]):
                reg = _apply_output(reg, cfg.output)
                coh = coh1 / 2.0 if cfg.output.quantum else coh1
                for r in sw.ratios:
                    rate = float(reg.ray_point(_direction(r, scn.s))[0])
                    norm = rate / coh if coh > 0 else math.nan
                    rows[sw.name].append(
                        (sw.parameter, value, f"{item.label} R1/R2={_ratio_text(r)}", rate, norm)
                    )
                if reg.metadata:
                    meta[sw.name].append({"value": value, "series": item.label, **reg.metadata})
    return RunResult(regions, labels, rows, meta, coherent_region(scn))


# ---------------------------------------------------------------- writers


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def _axis_scale(res: RunResult, out: OutputSpec) -> np.ndarray | None:
    if not out.normalize:
        return None
    coh = _apply_output(res.coherent, out).singletons
    if np.any(coh <= 0):
        raise ValidationError("normalization needs positive coherent-state singleton rates")
    return coh


def _geometries(res: RunResult, out: OutputSpec) -> list[tuple[str, Any]]:
    s = res.coherent.s
    if s not in (2, 3):
        return []
    scale = _axis_scale(res, out)
    return [(lab, region_geometry(reg, s, scale)) for lab, reg in zip(res.region_labels, res.regions)]


def write_region_csvs(res: RunResult, out: OutputSpec, outdir: Path) -> list[str]:
    if not res.regions:
        return []
    rows = []
    for lab, reg in zip(res.region_labels, res.regions):
        rows += [(lab, m, float(b)) for m, b in sorted(reg.bounds.items())]
    _write_csv(outdir / "regions.csv", ("region_label", "subset_bitmask", "bound_bits"), rows)
    written = ["regions.csv"]
    geos = _geometries(res, out)
    if res.coherent.s == 2:
        vrows = [(lab, float(x), float(y)) for lab, geo in geos for x, y in geo.vertices]
        _write_csv(outdir / "vertices2d.csv", ("region_label", "x", "y"), vrows)
        written.append("vertices2d.csv")
    elif res.coherent.s == 3:
        vrows, frows = [], []
        for lab, geo in geos:
            vrows += [(lab, i, *map(float, v)) for i, v in enumerate(geo.vertices)]
            if geo.facets is not None:
                frows += [(lab, *map(int, f)) for f in geo.facets]
        _write_csv(outdir / "vertices3d.csv", ("region_label", "vertex", "x", "y", "z"), vrows)
        _write_csv(outdir / "facets3d.csv", ("region_label", "v0", "v1", "v2"), frows)
        written += ["vertices3d.csv", "facets3d.csv"]
    return written


def write_sweep_csvs(res: RunResult, outdir: Path) -> list[str]:
    written = []
    for name, rows in res.sweep_rows.items():
        _write_csv(
            outdir / f"{name}.csv",
            ("sweep_param", "value", "series_label", "rate_bits", "normalized_rate"),
            rows,
        )
        written.append(f"{name}.csv")
    return written


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


def _svg_doc(body: list[str], title: str, w: int = 480, h: int = 400) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">\n<title>{title}</title>\n'
        f'<rect width="{w}" height="{h}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _legend(labels: Sequence[str], x0: float, y0: float) -> list[str]:
    out = []
    for i, lab in enumerate(labels):
        y = y0 + 16 * i
        c = _PALETTE[i % len(_PALETTE)]
        out.append(f'<line x1="{x0}" y1="{y}" x2="{x0 + 18}" y2="{y}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{x0 + 24}" y="{y + 4}" font-size="11" font-family="sans-serif">{lab}</text>')
    return out


def _p(v: float) -> str:
    return format(v, ".6g")


def region_svg(geos: list[tuple[str, Any]], s: int, normalized: bool) -> str:
    w, h, m = 480, 400, 50
    if s == 2:
        pts = np.vstack([g.vertices for _, g in geos])
    else:
        # isometric projection of the 3D mesh
        proj = np.array([[-math.sqrt(3) / 2, math.sqrt(3) / 2, 0.0], [-0.5, -0.5, 1.0]])
        pts = np.vstack([g.vertices @ proj.T for _, g in geos])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    def xy(p):
        u = m + (p[0] - lo[0]) / span[0] * (w - 2 * m)
        v = h - m - (p[1] - lo[1]) / span[1] * (h - 2 * m)
        return f"{_p(u)},{_p(v)}"

    body = []
    for i, (lab, geo) in enumerate(geos):
        c = _PALETTE[i % len(_PALETTE)]
        if s == 2:
            poly = " ".join(xy(p) for p in geo.vertices)
            body.append(f'<polygon points="{poly}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        elif geo.facets is not None:
            v2 = geo.vertices @ proj.T
            for f in geo.facets:
                poly = " ".join(xy(v2[j]) for j in f)
                body.append(f'<polygon points="{poly}" fill="{c}" fill-opacity="0.08" stroke="{c}" stroke-width="0.6"/>')
    if s == 2:
        unit = " / C_coh" if normalized else " (bits)"
        body.append(f'<text x="{w / 2}" y="{h - 12}" font-size="12" font-family="sans-serif" text-anchor="middle">R1{unit}</text>')
        body.append(f'<text x="14" y="{h / 2}" font-size="12" font-family="sans-serif" transform="rotate(-90 14 {h / 2})" text-anchor="middle">R2{unit}</text>')
    body += _legend([lab for lab, _ in geos], w - 170, 20)
    return _svg_doc(body, "rate regions", w, h)


def sweep_svg(name: str, rows: list[tuple]) -> str:
    w, h, m = 520, 400, 55
    series: dict[str, list[tuple[float, float]]] = {}
    for _, value, label, _, norm in rows:
        if math.isfinite(norm):
            series.setdefault(label, []).append((value, norm))
    xs = np.array([v for pts in series.values() for v, _ in pts] or [1.0])
    ys = np.array([y for pts in series.values() for _, y in pts] or [1.0])
    logx = bool(np.all(xs > 0)) and xs.max() / xs.min() > 20
    tx = np.log10 if logx else (lambda a: a)
    x_lo, x_hi = float(np.min(tx(xs))), float(np.max(tx(xs)))
    y_lo, y_hi = min(0.0, float(ys.min())), float(ys.max())
    x_sp = x_hi - x_lo or 1.0
    y_sp = y_hi - y_lo or 1.0

    def xy(x, y):
        u = m + (float(tx(np.array(x))) - x_lo) / x_sp * (w - 2 * m)
        v = h - m - (y - y_lo) / y_sp * (h - 2 * m)
        return f"{_p(u)},{_p(v)}"

    body = []
    for i, (label, pts) in enumerate(series.items()):
        c = _PALETTE[i % len(_PALETTE)]
        line = " ".join(xy(x, y) for x, y in pts)
        body.append(f'<polyline points="{line}" fill="none" stroke="{c}" stroke-width="1.5"/>')
    param = rows[0][0] if rows else ""
    axis = f"log10 {param}" if logx else param
    body.append(f'<text x="{w / 2}" y="{h - 12}" font-size="12" font-family="sans-serif" text-anchor="middle">{axis}</text>')
    body.append(f'<text x="14" y="{h / 2}" font-size="12" font-family="sans-serif" transform="rotate(-90 14 {h / 2})" text-anchor="middle">R1 / C_coh</text>')
    body += _legend(list(series), w - 210, 20)
    return _svg_doc(body, name, w, h)


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else fmt(v)
    if isinstance(x, np.integer):
        return int(x)
    return x


def build_manifest(cfg: RunConfig, res: RunResult | None, files: list[str]) -> dict:
    scn = cfg.scenario
    manifest: dict[str, Any] = {
        "tool": "qmac",
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "scenario": {"eta": list(scn.eta), "tau": scn.tau, "n_b": scn.n_b, "n_s": list(scn.n_s)},
        "config": cfg.raw,
        "output": dataclasses.asdict(cfg.output),
        "files": sorted(files + ["manifest.json"]),
        "adopted_readings": ADOPTED_READINGS,
        "regions": [],
        "sweeps": {},
        "truncation": {},
    }
    if res is not None:
        for lab, reg in zip(res.region_labels, res.regions):
            manifest["regions"].append({"label": lab, "kind": reg.label, "metadata": reg.metadata})
            if "total_count_mass_deficit" in reg.metadata:
                manifest["truncation"][lab] = reg.metadata["total_count_mass_deficit"]
        for name, entries in res.sweep_meta.items():
            manifest["sweeps"][name] = entries
            deficits = [e["total_count_mass_deficit"] for e in entries if "total_count_mass_deficit" in e]
            if deficits:
                manifest["truncation"][name] = max(deficits)
    return _jsonable(manifest)


def run(cfg: RunConfig, outdir: str | os.PathLike | None = None, workers: int = 1) -> list[str]:
    """Execute ``cfg`` and write its artifacts; returns the written file names."""
    target = Path(outdir if outdir is not None else cfg.output.dir)
    target.mkdir(parents=True, exist_ok=True)
    has_tasks = bool(cfg.regions.regions or cfg.regions.receivers or cfg.sweeps)
    res = execute(cfg, workers) if has_tasks else None
    files: list[str] = []
    if res is not None:
        if "csv" in cfg.output.formats:
            files += write_region_csvs(res, cfg.output, target)
            files += write_sweep_csvs(res, target)
        if "svg" in cfg.output.formats:
            geos = _geometries(res, cfg.output)
            if geos:
                (target / "regions.svg").write_text(
                    region_svg(geos, res.coherent.s, cfg.output.normalize), encoding="utf-8"
                )
                files.append("regions.svg")
            for name, rows in res.sweep_rows.items():
                (target / f"{name}.svg").write_text(sweep_svg(name, rows), encoding="utf-8")
                files.append(f"{name}.svg")
    # the manifest is always written: it is the record of the run
    manifest = build_manifest(cfg, res, files)
    with open(target / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return files + ["manifest.json"]


# ---------------------------------------------------------------- entry point


def default_workers() -> int:
    env = os.environ.get("QMAC_WORKERS")
    if env is None or env.strip() == "":
        return 1
    try:
        n = int(env)
    except ValueError as exc:
        raise ValidationError(f"QMAC_WORKERS must be a positive integer, got {env!r}") from exc
    if n < 1:
        raise ValidationError(f"QMAC_WORKERS must be a positive integer, got {env!r}")
    return n


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmac", description="Bosonic MAC rate regions and receiver rates.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="evaluate a JSON run configuration")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    r.add_argument("--workers", type=int, default=None, help="worker processes (default $QMAC_WORKERS or 1)")
    v = sub.add_parser("validate", help="run the self-check suite")
    v.add_argument("--fast", action="store_true", help="skip the slowest oracle cases")
    sub.add_parser("version", help="print the version")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(f"qmac {__version__}")
        return EXIT_OK
    if args.command == "validate":
        from .validation import format_report, run_checks

        results = run_checks(fast=args.fast)
        print(format_report(results))
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED
    try:
        workers = args.workers if args.workers is not None else default_workers()
        if workers < 1:
            raise ValidationError(f"--workers must be >= 1, got {workers}")
        cfg = load_config(args.config)
        files = run(cfg, args.out, workers)
    except (ValidationError, ResourceError) as exc:
        print(f"qmac: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PhysicalityError, CutoffError) as exc:
        print(f"qmac: numerical physicality error: {exc}", file=sys.stderr)
        return EXIT_PHYSICALITY
    except QmacError as exc:
        print(f"qmac: error: {exc}", file=sys.stderr)
        return EXIT_PHYSICALITY
    out = args.out if args.out is not None else cfg.output.dir
    print(f"wrote {len(files)} files to {out}: {', '.join(files)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
