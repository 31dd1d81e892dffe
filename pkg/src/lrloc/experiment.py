"""Config-driven experiment runner: validation, per-seed work items, CSV/JSON output."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import __version__
from .disorder import DistributionSpec
from .dynamics import delta_state, moment_trajectory, power_law_state
from .errors import InsufficientDataError
from .hamiltonian import OperatorSpec, assemble_hamiltonian, spectrum_bound
from .lattice import Cube, SiteSet
from .msa import EnergyGrid, loglog_slope, pair_event_for_seed, summarize_events
from .params import PRESETS, Params, desk_params, params_check, preset
from .resolvent import classify_cube
from .spectral import (
    center_counting,
    diagonalize,
    empirical_power_constants,
    fit_decay_exponent,
    maximizer_bad_fraction,
    sule_constant,
)

KINDS = ("spectrum", "sule", "dynamics", "msa-prob", "goodbad", "params-check")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Geometry(_Strict):
    d: int = Field(1, ge=1, le=4)
    radius: int = Field(20, ge=0)
    sites: Optional[list[list[int]]] = None  # explicit region, spectrum runs only


class DistributionConfig(_Strict):
    kind: Literal["uniform", "discrete-grid", "table-inverse-cdf"] = "uniform"
    M: float = Field(1.0, gt=0)
    points: list[float] = []
    weights: list[float] = []
    table: list[float] = []


class OperatorConfig(_Strict):
    r: Optional[float] = Field(None, gt=0)
    lam: Optional[Union[float, Literal["inf"]]] = None
    distribution: Optional[DistributionConfig] = None

    @field_validator("lam")
    @classmethod
    def _positive(cls, v):
        if isinstance(v, float) and not v > 0:
            raise ValueError("lam must be positive (use \"inf\" for the diagonal limit)")
        return v


class Seeds(_Strict):
    base: int = 0
    count: int = Field(1, ge=1)


class GridConfig(_Strict):
    E0: float = 0.0
    eta: Optional[float] = Field(None, ge=0)
    n_points: int = Field(41, ge=1)


class DynamicsConfig(_Strict):
    times: Optional[list[float]] = None
    grid: Literal["linear", "geometric"] = "linear"
    t_max: float = Field(200.0, gt=0)
    n_times: int = Field(401, ge=2)
    q: float = Field(2.0, ge=0)
    s: float = Field(1.0, ge=0)
    theta: Optional[Union[float, Literal["inf"]]] = "inf"
    normalize: bool = True


class SuleConfig(_Strict):
    gamma: Optional[float] = Field(None, gt=0)
    eps_prime: Optional[float] = None
    maximizer_L: list[int] = [4, 8]
    count_L: list[int] = [5, 10, 20]


class MsaConfig(_Strict):
    scales: list[int] = [4, 6, 8, 10]
    grid: GridConfig = GridConfig()


class GoodBadConfig(_Strict):
    L: int = Field(4, ge=1)
    centers: list[list[int]] = [[0]]
    grid: GridConfig = GridConfig()


class ExperimentConfig(_Strict):
    kind: Literal["spectrum", "sule", "dynamics", "msa-prob", "goodbad", "params-check"]
    preset: Optional[Literal["theory", "desk", "desk-weak"]] = None
    geometry: Geometry = Geometry()
    operator: OperatorConfig = OperatorConfig()
    params: dict = {}
    seeds: Seeds = Seeds()
    dynamics: DynamicsConfig = DynamicsConfig()
    sule: SuleConfig = SuleConfig()
    msa: MsaConfig = MsaConfig()
    goodbad: GoodBadConfig = GoodBadConfig()
    output_dir: Optional[str] = None


class ConfigError(ValueError):
    pass


def load_config(source) -> ExperimentConfig:
    """Parse a JSON file path or dict; errors name the offending field path."""
    from pydantic import ValidationError

    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    else:
        data = source
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = ["{}: {}".format(".".join(str(p) for p in e["loc"]) or "<root>", e["msg"]) for e in exc.errors()]
        raise ConfigError("; ".join(msgs)) from exc
    resolve(cfg)  # surfaces param/distribution errors early
    return cfg


def resolve(cfg: ExperimentConfig) -> dict:
    """Fill preset and defaults; return the fully resolved, JSON-serializable config."""
    d = cfg.geometry.d
    if cfg.preset:
        base_params, op = preset(cfg.preset, d)
    else:
        r = cfg.operator.r if cfg.operator.r is not None else 8.0
        base_params = desk_params(d, r)
        op = {"d": d, "r": r, "lam": 50.0, "distribution": {"kind": "uniform", "M": 1.0}}
    if cfg.operator.r is not None:
        op["r"] = cfg.operator.r
    if cfg.operator.lam is not None:
        op["lam"] = cfg.operator.lam
    if cfg.operator.distribution is not None:
        dist = cfg.operator.distribution.model_dump()
        op["distribution"] = {k: v for k, v in dist.items() if v != [] or k in ("kind", "M")}
    try:
        DistributionSpec.from_dict(op["distribution"])
        prm = Params.from_dict({**base_params.to_dict(), **cfg.params, "d": d, "r": float(op["r"])})
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"params/operator: {exc}") from exc
    if op["lam"] != "inf":
        op["lam"] = float(op["lam"])
    if cfg.geometry.sites is not None:
        if cfg.kind != "spectrum":
            raise ConfigError("geometry.sites: explicit regions are only supported for kind=spectrum")
        if any(len(site) != d for site in cfg.geometry.sites):
            raise ConfigError(f"geometry.sites: every site needs {d} coordinates")
    if cfg.kind == "msa-prob" and cfg.seeds.count < 30:
        raise ConfigError("seeds.count: msa-prob needs at least 30 samples per scale")
    out = cfg.model_dump()
    out["operator"] = op
    out["params"] = prm.to_dict()
    out.pop("output_dir", None)
    return out


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _operator(resolved: dict, seed: int) -> OperatorSpec:
    op = resolved["operator"]
    lam = math.inf if op["lam"] == "inf" else float(op["lam"])
    return OperatorSpec(op["d"], float(op["r"]), lam, DistributionSpec.from_dict(op["distribution"]), int(seed))


def _grid(resolved: dict, section: str, op: OperatorSpec) -> EnergyGrid:
    g = resolved[section]["grid"]
    eta = g["eta"]
    if eta is None:
        eta = spectrum_bound(op.lam, op.hopping, op.distribution.M)
    return EnergyGrid(g["E0"], eta, g["n_points"])


def _times(dyn: dict) -> np.ndarray:
    if dyn["times"] is not None:
        return np.asarray(dyn["times"], float)
    if dyn["grid"] == "geometric":
        k = np.arange(int(math.floor(math.log2(dyn["t_max"]))) + 1)
        return np.concatenate([[0.0], 2.0**k])
    return np.linspace(0.0, dyn["t_max"], dyn["n_times"])


# ---------------------------------------------------------------- per-seed work


def _box(resolved: dict) -> Cube:
    g = resolved["geometry"]
    return Cube.around((0,) * g["d"], g["radius"], g["d"])


def _center_cols(d: int) -> list[str]:
    return [f"center_{i}" for i in range(d)]


def _run_spectrum(resolved, seed):
    explicit = resolved["geometry"]["sites"]
    box = SiteSet(explicit) if explicit is not None else _box(resolved)
    op = _operator(resolved, seed)
    sys = diagonalize(op.hamiltonian(box))
    ipr = np.sum(sys.eigenvectors**4, axis=0)
    header = ["j", "E_j", *_center_cols(box.dim), "ipr"]
    rows = [[j, sys.eigenvalues[j], *sys.centers[j].tolist(), ipr[j]] for j in range(len(sys))]
    bound = spectrum_bound(op.lam, op.hopping, op.distribution.M)
    payload = {
        "reconstruction_error": sys.reconstruction_error(),
        "completeness_error": sys.completeness_error(),
        "spectrum_within_bound": bool(np.all(np.abs(sys.eigenvalues) <= bound + 1e-12)),
    }
    return {"spectrum": (header, rows)}, payload


def _run_sule(resolved, seed):
    box = _box(resolved)
    op = _operator(resolved, seed)
    prm = Params.from_dict(resolved["params"])
    sc = resolved["sule"]
    gamma = sc["gamma"] if sc["gamma"] is not None else prm.gamma
    eps = sc["eps_prime"] if sc["eps_prime"] is not None else prm.eps_prime
    sys = diagonalize(op.hamiltonian(box))
    rep = sule_constant(sys, gamma, eps)
    header = ["j", "E_j", *_center_cols(box.dim), "gamma_hat", "fit_q", "sule_term"]
    rows = []
    for j in range(len(sys)):
        try:
            fit = fit_decay_exponent(sys.eigenvectors[:, j], box, sys.centers[j])
            g_hat, q_fit = fit.gamma, fit.quality
        except InsufficientDataError:
            g_hat = q_fit = math.nan
        rows.append([j, sys.eigenvalues[j], *sys.centers[j].tolist(), g_hat, q_fit, rep.per_state[j]])
    bad = {}
    for L in sc["maximizer_L"]:
        frac, n = maximizer_bad_fraction(sys, L, prm)
        bad[str(L)] = {"bad_fraction": frac, "eligible": n}
    counts = {str(L): center_counting(sys, L).count for L in sc["count_L"] if L <= box.radius}
    pconst = empirical_power_constants(sys, prm.r / 600)
    payload = {"D": rep.D, "power_constant_max": float(pconst.max()), "gamma": gamma, "eps_prime": eps, "maximizer_bad": bad, "center_counts": counts}
    return {"sule": (header, rows)}, payload


def _run_dynamics(resolved, seed):
    box = _box(resolved)
    op = _operator(resolved, seed)
    dyn = resolved["dynamics"]
    sys = diagonalize(op.hamiltonian(box))
    theta = dyn["theta"]
    if theta is None or theta == "inf":
        phi = delta_state(box)
        phi_const = 1.0
    else:
        phi = power_law_state(float(theta), box, dyn["normalize"])
        # hypothesis constant: sup_n |phi(n)| max(1,|n|)^theta
        weight = np.maximum(1, np.abs(box.sites).max(axis=1)).astype(float) ** float(theta)
        phi_const = float(np.max(np.abs(phi.amplitudes) * weight))
    times = _times(dyn)
    ms = moment_trajectory(sys, phi, times, dyn["q"], dyn["s"])
    header = ["t", "M_q", "Hs_norm", "norm_drift"]
    rows = [[t, m, h, nd] for t, m, h, nd in zip(times, ms.moments, ms.hs_norms, ms.norm_drift)]
    hit = np.nonzero(ms.contaminated)[0]
    payload = {
        "phi_constant": phi_const,
        "sup_M_q": float(ms.moments.max()),
        "sup_Hs_norm": float(ms.hs_norms.max()),
        "max_norm_drift": float(ms.norm_drift.max()),
        "boundary_contaminated_from": float(times[hit[0]]) if len(hit) else None,
    }
    return {"dynamics": (header, rows)}, payload


def _run_goodbad(resolved, seed):
    op = _operator(resolved, seed)
    prm = Params.from_dict(resolved["params"])
    gb = resolved["goodbad"]
    grid = _grid(resolved, "goodbad", op)
    d = op.d
    cubes = [Cube.around(tuple(c) if len(c) == d else (0,) * d, gb["L"], d) for c in gb["centers"]]
    sites = np.unique(np.concatenate([c.sites for c in cubes]), axis=0)
    real = op.realization(sites)
    header = ["cube_id", "E", "verdict", "margin_s0", "margin_r1"]
    rows = []
    n_bad = 0
    for cube in cubes:
        H = assemble_hamiltonian(cube, op.lam, real, op.hopping)
        for E in grid.points:
            v = classify_cube(H, float(E), prm)
            n_bad += not v.good
            rows.append([v.cube_id, v.energy, v.verdict, v.margin_s0, v.margin_r1])
    return {"goodbad": (header, rows)}, {"n_bad": n_bad, "n_total": len(rows), "grid_spacing": grid.spacing}


class SeedFailure(RuntimeError):
    def __init__(self, seed, exc):
        super().__init__(f"seed {seed}: {type(exc).__name__}: {exc}")
        self.seed = seed


def _run_pair(args):
    resolved, seed, L = args
    try:
        op = _operator(resolved, seed)
        return pair_event_for_seed(op, L, _grid(resolved, "msa", op), Params.from_dict(resolved["params"]))
    except Exception as exc:
        raise SeedFailure(seed, exc) from exc


def _run_seed(args):
    kind, resolved, seed = args
    t0 = time.perf_counter()
    try:
        tables, payload = _SEED_RUNNERS[kind](resolved, seed)
    except Exception as exc:
        raise SeedFailure(seed, exc) from exc
    return seed, tables, payload, time.perf_counter() - t0


_SEED_RUNNERS = {
    "spectrum": _run_spectrum,
    "sule": _run_sule,
    "dynamics": _run_dynamics,
    "goodbad": _run_goodbad,
}


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(table, path) -> Path:
    """Write (header, rows) as RFC-4180 CSV, UTF-8, floats at 17 significant digits."""
    header, rows = table
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def run_experiment(cfg: ExperimentConfig, out_dir, jobs: int = 1, seed: int | None = None) -> dict:
    """Run one configured experiment; returns the summary that is also written to disk."""
    if seed is not None:
        cfg = cfg.model_copy(update={"seeds": Seeds(base=seed, count=cfg.seeds.count)})
    resolved = resolve(cfg)
    chash = config_hash(resolved)
    kind = resolved["kind"]
    prm = Params.from_dict(resolved["params"])
    report = [r._asdict() for r in params_check(prm)]
    target = Path(out_dir) / f"{kind}-{chash[:12]}"
    target.mkdir(parents=True, exist_ok=True)
    (target / "config.json").write_text(
        json.dumps({"config_hash": chash, "config": resolved}, indent=2, sort_keys=True) + "\n"
    )
    seeds = [resolved["seeds"]["base"] + i for i in range(resolved["seeds"]["count"])]
    t0 = time.perf_counter()
    records = []
    files = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        if kind == "params-check":
            rows = [[r["id"], r["satisfied"], r["slack"]] for r in report]
            files.append(emit_csv((["relation", "satisfied", "slack"], rows), target / "params_check.csv"))
        elif kind == "msa-prob":
            scales = resolved["msa"]["scales"]
            tasks = [(resolved, s, L) for L in scales for s in seeds]
            events = list(pool.map(_run_pair, tasks, chunksize=8)) if pool else [_run_pair(t) for t in tasks]
            table = []
            for i, L in enumerate(scales):
                table.append(summarize_events(L, events[i * len(seeds):(i + 1) * len(seeds)], prm.p))
            header = ["L", "n_samples", "p_hat", "ci_lo", "ci_hi", "L_pow_minus2p"]
            rows = [[r.L, r.n_samples, r.p_hat, r.ci_lo, r.ci_hi, r.L_pow_minus2p] for r in table]
            files.append(emit_csv((header, rows), target / "msa_prob.csv"))
            op0 = _operator(resolved, seeds[0])
            records.append({"loglog_slope": loglog_slope(table), "grid_spacing": _grid(resolved, "msa", op0).spacing})
        else:
            tasks = [(kind, resolved, s) for s in seeds]
            results = list(pool.map(_run_seed, tasks)) if pool else [_run_seed(t) for t in tasks]
            for s, tables, payload, wall in sorted(results, key=lambda x: x[0]):
                for name, table in tables.items():
                    files.append(emit_csv(table, target / f"{name}_seed{s}.csv"))
                records.append({"config_hash": chash, "seed": s, "payload": payload,
                                "wall_time": wall, "version": __version__})
    finally:
        if pool:
            pool.shutdown()
    summary = {
        "config_hash": chash,
        "kind": kind,
        "version": __version__,
        "params_check": report,
        "params_all_satisfied": all(r["satisfied"] for r in report),
        "records": records,
        "files": [f.name for f in files],
        "wall_time": time.perf_counter() - t0,
    }
    (target / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    summary["directory"] = str(target)
    return summary


def preset_names() -> list[tuple[str, str]]:
    return [(k, v["description"]) for k, v in PRESETS.items()]
