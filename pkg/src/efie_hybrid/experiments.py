"""Run configuration, end-to-end pipelines and the scaling benchmark."""

from __future__ import annotations

import configparser
import contextlib
import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .complexity import POLYLOG, ComplexityParams, predict_complexity
from .farfield import (RcsSweep, mie_rcs, radiated_rcs, rcs_relative_error,
                       triangle_current_magnitudes)
from .hybrid import HybridConfig, SolveReport, hybrid_solve
from .mesh import build_rwg, generate_sphere, generate_uv_sphere, load_mesh
from .mom import BackgroundMedium, PlaneWave, assemble_system, complexify_solution, realify
from .qalgo import HhlConfig, VqlsConfig
from .qsim import NoiseModel

log = logging.getLogger(__name__)

KINDS = ("solve", "rcs", "mie", "bench", "compare", "case-table")
EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


@dataclass(frozen=True)
class Geometry:
    """A sphere (icosphere or UV) or a mesh file; exactly one source."""

    radius: float | None = 1.0
    mesh: str = "icosphere"
    level: int = 2
    n_longitude: int = 71
    n_bands: int = 22
    path: str | None = None

    def __post_init__(self):
        if (self.radius is None) == (self.path is None):
            raise ValueError("give exactly one geometry source: a sphere radius or a mesh path")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("sphere radius must be positive")
        if self.mesh not in ("icosphere", "uv"):
            raise ValueError("sphere mesh must be 'icosphere' or 'uv'")

    @property
    def is_sphere(self) -> bool:
        return self.path is None

    @property
    def ident(self) -> str:
        if self.path is not None:
            return Path(self.path).name
        if self.mesh == "icosphere":
            return f"icosphere(r={self.radius:g},level={self.level})"
        return f"uvsphere(r={self.radius:g},{self.n_longitude}x{self.n_bands})"

    def build(self):
        if self.path is not None:
            return load_mesh(self.path)
        if self.mesh == "icosphere":
            return generate_sphere(self.radius, self.level)
        return generate_uv_sphere(self.radius, self.n_longitude, self.n_bands)

    @classmethod
    def parse(cls, token: str) -> "Geometry":
        """``r:level`` (icosphere) or ``r:uv:n_longitude:n_bands``."""
        parts = token.strip().split(":")
        if len(parts) == 2:
            return cls(radius=float(parts[0]), level=int(parts[1]))
        if len(parts) == 4 and parts[1] == "uv":
            return cls(radius=float(parts[0]), mesh="uv", n_longitude=int(parts[2]),
                       n_bands=int(parts[3]))
        raise ValueError(f"cannot parse geometry {token!r}")


@dataclass(frozen=True)
class RunConfig:
    kind: str = "solve"
    geometry: Geometry = Geometry()
    frequency: float = 300e6
    solver: HybridConfig = HybridConfig()
    out: str = "out"
    quadrature_order: int = 4
    compare_direct: bool = True
    bench_sizes: tuple = (Geometry(1.0, level=0), Geometry(1.0, level=1),
                          Geometry(1.0, level=2), Geometry(1.0, level=3))
    bench_direct: bool = True
    cases: tuple = tuple(range(1, 13))
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"experiment kind must be one of {KINDS}")
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if self.workers < 1:
            raise ValueError("worker count must be positive")


# -- configuration file ------------------------------------------------------

def _get(sec, key, conv, default):
    if sec is None or key not in sec or sec[key].strip() == "":
        return default
    raw = sec[key].strip()
    if conv is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    return conv(raw)


def _opt_int(raw):
    return None if raw.lower() in ("none", "") else int(raw)


def load_config(path=None, **overrides) -> RunConfig:
    """Read an INI file (sections run, geometry, excitation, solver, hhl,
    vqls, noise, bench, case_table) and apply command-line overrides."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        if not os.path.exists(path):
            raise FileNotFoundError(f"config file {path} not found")
        cp.read(path)

    def sec(name):
        return cp[name] if cp.has_section(name) else None

    g = sec("geometry")
    gpath = _get(g, "path", str, None)
    geometry = Geometry(
        radius=None if gpath else _get(g, "radius", float, 1.0),
        mesh=_get(g, "mesh", str, "icosphere"),
        level=_get(g, "level", int, 2),
        n_longitude=_get(g, "n_longitude", int, 71),
        n_bands=_get(g, "n_bands", int, 22),
        path=gpath,
    )
    if g is not None and gpath and "radius" in g:
        raise ValueError("give exactly one geometry source: a sphere radius or a mesh path")

    r = sec("run")
    seed = overrides.get("seed")
    if seed is None:
        seed = _get(r, "seed", int, 0)

    h = sec("hhl")
    hhl = HhlConfig(clock_qubits=_get(h, "clock_qubits", int, 10),
                    max_attempts=_get(h, "max_attempts", int, 10000))
    v = sec("vqls")
    vqls = VqlsConfig(layers=_get(v, "layers", int, 1),
                      threshold=_get(v, "threshold", float, 1e-3),
                      max_iter=_get(v, "max_iter", int, 500),
                      learning_rate=_get(v, "learning_rate", float, 0.1),
                      restarts=_get(v, "restarts", int, 5),
                      trajectories=_get(v, "trajectories", int, 16),
                      shots=_get(v, "shots", _opt_int, None),
                      optimizer=_get(v, "optimizer", str, "auto"),
                      seed=seed)
    nz = sec("noise")
    p = overrides.get("noise")
    if p is None:
        p = _get(nz, "p", float, 0.0)
    kinds = _get(nz, "kinds", str, "ry, cnot")
    noise = NoiseModel(p, frozenset(k.strip() for k in kinds.split(",") if k.strip()), seed)

    s = sec("solver")
    solver = HybridConfig(
        xi_ext=_get(s, "xi_ext", float, 1e-3),
        xi_int=_get(s, "xi_int", float, 1e-3),
        n_sub=_get(s, "n_sub", int, 32),
        max_ext=_get(s, "max_ext", int, 200),
        max_int=_get(s, "max_int", int, 50),
        inner=overrides.get("inner") or _get(s, "inner", str, "qr"),
        precond=overrides.get("precond") or _get(s, "precond", str, "ilut"),
        ilut_tau=_get(s, "ilut_tau", float, 1e-3),
        ilut_fill=_get(s, "ilut_fill", _opt_int, None),
        ilut_ordering=_get(s, "ilut_ordering", str, "auto"),
        relative=_get(s, "relative", bool, True),
        estimate_condition=_get(s, "estimate_condition", bool, True),
        hhl=hhl, vqls=vqls, noise=noise, seed=seed,
    )

    b = sec("bench")
    sizes = _get(b, "sizes", str, None)
    bench_sizes = (tuple(Geometry.parse(t) for t in sizes.split(",") if t.strip())
                   if sizes else RunConfig.bench_sizes)
    c = sec("case_table")
    cases = _get(c, "cases", str, None)
    cases = tuple(int(t) for t in cases.split(",")) if cases else tuple(range(1, 13))

    e = sec("excitation")
    return RunConfig(
        kind=overrides.get("kind") or _get(r, "kind", str, "solve"),
        geometry=geometry,
        frequency=_get(e, "frequency", float, 300e6),
        solver=solver,
        out=overrides.get("out") or _get(r, "out", str, "out"),
        quadrature_order=_get(r, "quadrature_order", int, 4),
        compare_direct=_get(r, "compare_direct", bool, True),
        bench_sizes=bench_sizes,
        bench_direct=_get(b, "direct", bool, True),
        cases=cases,
        workers=overrides.get("workers") or _get(r, "workers", int, 1),
    )


# -- building blocks -----------------------------------------------------------

@dataclass
class Problem:
    geometry: Geometry
    mesh: object
    rwg: object
    system: object           # RealSystem
    frequency: float
    medium: BackgroundMedium = field(default_factory=BackgroundMedium)

    @property
    def counts(self) -> dict:
        return {"N_p": self.mesh.n_triangles, "N_n": self.mesh.n_vertices,
                "N_e": self.rwg.n_edges, "N": 2 * self.rwg.n_edges}


def build_problem(geometry: Geometry, frequency: float, quadrature_order: int = 4) -> Problem:
    with stage("geometry"):
        mesh = geometry.build()
        rwg = build_rwg(mesh)
    with stage("assembly"):
        medium = BackgroundMedium()
        csys = assemble_system(mesh, rwg, PlaneWave(frequency), medium, quadrature_order)
        rsys = realify(csys)
    return Problem(geometry, mesh, rwg, rsys, frequency, medium)


def sweep_from_solution(problem: Problem, x: np.ndarray, quadrature_order: int = 4) -> RcsSweep:
    currents = complexify_solution(x, problem.rwg.n_edges)
    return radiated_rcs(currents, problem.rwg, problem.medium, problem.frequency,
                        quadrature_order=quadrature_order)


def _with_meta(sweep: RcsSweep, **meta) -> RcsSweep:
    return RcsSweep(sweep.theta_deg, sweep.sigma, sweep.frequency, sweep.phi_deg,
                    {**sweep.metadata, **meta})


def write_currents(path, problem: Problem, x: np.ndarray) -> None:
    mag = triangle_current_magnitudes(complexify_solution(x, problem.rwg.n_edges), problem.rwg)
    c = problem.mesh.centroids
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["triangle", "cx", "cy", "cz", "abs_j"])
        for i, (p, m) in enumerate(zip(c, mag)):
            w.writerow([i, f"{p[0]:.9g}", f"{p[1]:.9g}", f"{p[2]:.9g}", f"{m:.9e}"])


def _report_dict(rep: SolveReport) -> dict:
    return {"converged": rep.converged, "inner": rep.inner, "preconditioner": rep.precond,
            "N_ext": rep.n_ext, "N_int": rep.n_int, "N_qubit": rep.n_qubits,
            "kappa_tilde": rep.kappa_tilde, "kappa_sub_mean": rep.kappa_sub_mean,
            "final_alpha": rep.alpha[-1] if rep.alpha else None,
            "residual_mode": "relative" if rep.relative else "absolute",
            "timings_s": {"T_precond": rep.t_precond, "T_sub_build": rep.t_sub_build,
                          "T_iter_quantum": rep.t_iter_quantum, "T_total": rep.t_total}}


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"cannot serialise {type(o)}")


# -- experiments -------------------------------------------------------------------

def run_solve(cfg: RunConfig, out: Path) -> int:
    problem = build_problem(cfg.geometry, cfg.frequency, cfg.quadrature_order)
    with stage("hybrid-solve"):
        x, rep = hybrid_solve(problem.system, cfg.solver)
    deltas = []
    with stage("farfield"):
        sweep = _with_meta(sweep_from_solution(problem, x, cfg.quadrature_order),
                           mesh=cfg.geometry.ident, solver=f"hybrid-{cfg.solver.inner}")
        if cfg.geometry.is_sphere:
            mie = mie_rcs(cfg.geometry.radius, problem.medium, cfg.frequency)
            deltas.append({"reference": "mie", "value": rcs_relative_error(sweep, mie)})
            mie.to_csv(out / "rcs_mie.csv")
        if cfg.compare_direct:
            xd = np.linalg.solve(problem.system.A, problem.system.b)
            direct = sweep_from_solution(problem, xd, cfg.quadrature_order)
            deltas.append({"reference": "direct", "value": rcs_relative_error(sweep, direct)})
    with stage("output"):
        sweep.to_csv(out / "rcs.csv")
        write_currents(out / "currents.csv", problem, x)
        rep.to_csv(out / "residuals.csv")
        (out / "report.txt").write_text(rep.text())
        _write_json(out / "summary.json", {
            "kind": cfg.kind, "geometry": cfg.geometry.ident, "frequency_hz": cfg.frequency,
            **problem.counts, **_report_dict(rep), "delta_rcs": deltas,
            "delta_rcs_scale": "linear"})
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def run_rcs(cfg: RunConfig, out: Path) -> int:
    """Classical reference: dense direct solve and its RCS sweep."""
    problem = build_problem(cfg.geometry, cfg.frequency, cfg.quadrature_order)
    with stage("direct-solve"):
        t0 = time.perf_counter()
        x = np.linalg.solve(problem.system.A, problem.system.b)
        t_direct = time.perf_counter() - t0
    deltas = []
    with stage("farfield"):
        sweep = _with_meta(sweep_from_solution(problem, x, cfg.quadrature_order),
                           mesh=cfg.geometry.ident, solver="direct")
        if cfg.geometry.is_sphere:
            mie = mie_rcs(cfg.geometry.radius, problem.medium, cfg.frequency)
            deltas.append({"reference": "mie", "value": rcs_relative_error(sweep, mie)})
    with stage("output"):
        sweep.to_csv(out / "rcs.csv")
        write_currents(out / "currents.csv", problem, x)
        _write_json(out / "summary.json", {
            "kind": cfg.kind, "geometry": cfg.geometry.ident, "frequency_hz": cfg.frequency,
            **problem.counts, "solver": "direct", "T_direct_s": t_direct, "delta_rcs": deltas,
            "delta_rcs_scale": "linear"})
    return EXIT_OK


def run_mie(cfg: RunConfig, out: Path) -> int:
    with stage("mie"):
        if not cfg.geometry.is_sphere:
            raise ValueError("the Mie series needs a sphere geometry")
        sweep = mie_rcs(cfg.geometry.radius, BackgroundMedium(), cfg.frequency)
    with stage("output"):
        sweep.to_csv(out / "rcs_mie.csv")
        _write_json(out / "summary.json", {
            "kind": cfg.kind, "radius_m": cfg.geometry.radius, "frequency_hz": cfg.frequency,
            "mie_terms": sweep.metadata["mie_terms"], "samples": len(sweep.theta_deg)})
    return EXIT_OK


def run_compare(cfg: RunConfig, out: Path) -> int:
    """Configured inner solver against the QR inner solver and a direct solve."""
    problem = build_problem(cfg.geometry, cfg.frequency, cfg.quadrature_order)
    with stage("hybrid-solve"):
        x, rep = hybrid_solve(problem.system, cfg.solver)
        x_qr, rep_qr = hybrid_solve(problem.system, replace(cfg.solver, inner="qr"))
    with stage("direct-solve"):
        x_d = np.linalg.solve(problem.system.A, problem.system.b)
    with stage("farfield"):
        s = sweep_from_solution(problem, x, cfg.quadrature_order)
        s_qr = sweep_from_solution(problem, x_qr, cfg.quadrature_order)
        s_d = sweep_from_solution(problem, x_d, cfg.quadrature_order)
        deltas = [{"reference": "qr", "value": rcs_relative_error(s, s_qr)},
                  {"reference": "direct", "value": rcs_relative_error(s, s_d)}]
        if cfg.geometry.is_sphere:
            mie = mie_rcs(cfg.geometry.radius, problem.medium, cfg.frequency)
            deltas.append({"reference": "mie", "value": rcs_relative_error(s, mie)})
    nd = np.linalg.norm(x_d)
    with stage("output"):
        _with_meta(s, solver=f"hybrid-{cfg.solver.inner}").to_csv(out / "rcs.csv")
        rep.to_csv(out / "residuals.csv")
        (out / "report.txt").write_text(rep.text())
        _write_json(out / "summary.json", {
            "kind": cfg.kind, "geometry": cfg.geometry.ident, **problem.counts,
            **_report_dict(rep), "delta_rcs": deltas, "delta_rcs_scale": "linear",
            "solution_error": [
                {"reference": "qr", "value": float(np.linalg.norm(x - x_qr) / np.linalg.norm(x_qr))},
                {"reference": "direct", "value": float(np.linalg.norm(x - x_d) / nd)}],
            "qr_converged": rep_qr.converged})
    return EXIT_OK if rep.converged and rep_qr.converged else EXIT_NOT_CONVERGED


# Published parameter study: inner solver, noise, preconditioner (ILUT where the
# reported kappa is the small one), N_sub, thresholds, and the reported results.
PUBLISHED_CASES = {
    1: ("hhl", False, "identity", 32, 1e-3, 1e-3, 75.27, 12, 5, 10, 0.0061),
    2: ("hhl", False, "identity", 32, 1e-3, 1e-3, 75.27, 16, 5, 9, 0.0059),
    3: ("hhl", False, "ilut", 32, 1e-3, 1e-3, 5.23, 21, 1, 1, 0.0049),
    4: ("hhl", False, "ilut", 32, 1e-3, 1e-4, 5.23, 21, 1, 1, 0.0049),
    5: ("hhl", False, "ilut", 32, 1e-2, 1e-3, 5.23, 21, 1, 1, 0.0049),
    6: ("hhl", False, "ilut", 4, 1e-3, 1e-3, 5.23, 8, 1, 3, 0.0055),
    7: ("vqls", False, "identity", 32, 1e-3, 1e-3, 75.27, 5, 40, 192432, 0.0058),
    8: ("vqls", False, "ilut", 32, 1e-3, 1e-3, 5.23, 5, 1, 287, 0.0047),
    9: ("vqls", False, "ilut", 32, 1e-3, 1e-4, 5.23, 5, 1, 1673, 0.0052),
    10: ("vqls", False, "ilut", 32, 1e-2, 1e-3, 5.23, 5, 1, 4, 0.0054),
    11: ("vqls", False, "ilut", 4, 1e-3, 1e-3, 5.23, 2, 2, 4, 0.0047),
    12: ("vqls", True, "ilut", 32, 1e-3, 1e-3, 5.23, 5, 1, 99, 0.0058),
}
CASE_NOISE = 0.2


def case_solver_config(case: int, base: HybridConfig) -> HybridConfig:
    inner, noisy, pre, n_sub, xe, xi, _, nq, *_ = PUBLISHED_CASES[case]
    kw = dict(inner=inner, precond=pre, n_sub=n_sub, xi_ext=xe, xi_int=xi)
    if inner == "hhl":
        # published register size = ancilla + clock + log2(2 N_sub) for the dilation
        kw["hhl"] = replace(base.hhl, clock_qubits=nq - 1 - int(math.log2(2 * n_sub)))
    kw["noise"] = NoiseModel(CASE_NOISE if noisy else 0.0, base.noise.kinds, base.seed)
    return replace(base, **kw)


def _case_row(args):
    case, cfg, problem = args
    scfg = case_solver_config(case, cfg.solver)
    t0 = time.perf_counter()
    x, rep = hybrid_solve(problem.system, scfg)
    sweep = sweep_from_solution(problem, x, cfg.quadrature_order)
    row = {"case": case, "inner": scfg.inner, "noise": scfg.noise.p, "precond": scfg.precond,
           "n_sub": scfg.n_sub, "xi_ext": scfg.xi_ext, "xi_int": scfg.xi_int,
           "kappa_tilde": rep.kappa_tilde, "n_qubit": rep.n_qubits, "n_ext": rep.n_ext,
           "n_int": rep.n_int, "converged": rep.converged}
    if cfg.geometry.is_sphere:
        mie = mie_rcs(cfg.geometry.radius, problem.medium, cfg.frequency)
        row["delta_rcs_vs_mie"] = rcs_relative_error(sweep, mie)
    pc = PUBLISHED_CASES[case]
    row.update({"published_kappa_tilde": pc[6], "published_n_qubit": pc[7],
                "published_n_ext": pc[8], "published_n_int": pc[9],
                "published_delta_rcs": pc[10],
                "wall_s": time.perf_counter() - t0})
    return row


def _pool_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _write_rows(path, rows) -> None:
    keys = list(rows[0].keys())
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow(r)


def run_case_table(cfg: RunConfig, out: Path) -> int:
    for c in cfg.cases:
        if c not in PUBLISHED_CASES:
            raise PipelineError("case-table", ValueError(f"unknown case {c}"))
    problem = build_problem(cfg.geometry, cfg.frequency, cfg.quadrature_order)
    with stage("case-table"):
        rows = _pool_map(_case_row, [(c, cfg, problem) for c in cfg.cases], cfg.workers)
    with stage("output"):
        _write_rows(out / "case_table.csv", rows)
        _write_json(out / "summary.json", {
            "kind": cfg.kind, "geometry": cfg.geometry.ident, **problem.counts,
            "cases": rows, "delta_rcs_reference": "mie", "delta_rcs_scale": "linear"})
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NOT_CONVERGED


# -- scaling benchmark ---------------------------------------------------------------

def fit_exponent(sizes, times) -> float:
    """Slope of log(time) against log(size)."""
    sizes = np.asarray(sizes, dtype=float)
    times = np.asarray(times, dtype=float)
    if sizes.size < 2 or np.any(times <= 0):
        raise ValueError("need at least two positive timings")
    return float(np.polyfit(np.log(sizes), np.log(times), 1)[0])


def _bench_row(args):
    geometry, cfg = args
    problem = build_problem(geometry, cfg.frequency, cfg.quadrature_order)
    x, rep = hybrid_solve(problem.system, cfg.solver)
    row = {"geometry": geometry.ident, "radius_m": geometry.radius, **problem.counts,
           "kappa_tilde": rep.kappa_tilde, "kappa_sub_mean": rep.kappa_sub_mean,
           "n_ext": rep.n_ext, "n_int": rep.n_int, "converged": rep.converged,
           "t_sub_build_s": rep.t_sub_build, "t_iter_quantum_s": rep.t_iter_quantum,
           "t_precond_s": rep.t_precond, "t_total_s": rep.t_total}
    if cfg.bench_direct:
        A, b = problem.system.A, problem.system.b
        best = math.inf
        for _ in range(3):
            t0 = time.perf_counter()
            np.linalg.solve(A, b)
            best = min(best, time.perf_counter() - t0)
        row["t_direct_s"] = best
    return row


def bench_scaling(cfg: RunConfig, out: Path | None = None) -> dict:
    """Time the hybrid solve over several sphere sizes and fit log-log exponents.

    Returns the per-size rows plus fitted exponents of the hybrid total time,
    of a dense direct solve, and of the N log N reference, and the normalised
    hybrid cost model evaluated with each run's measured kappa values.
    """
    if len(cfg.bench_sizes) < 3:
        raise ValueError("the scaling benchmark needs at least three sizes")
    rows = _pool_map(_bench_row, [(g, cfg) for g in cfg.bench_sizes], cfg.workers)
    rows.sort(key=lambda r: r["N"])
    N = [r["N"] for r in rows]
    model = "hybrid-HHL" if cfg.solver.inner == "hhl" else "hybrid-VQLS"
    preds = []
    for r in rows:
        params = ComplexityParams(kappa=r["kappa_tilde"] or 1.0,
                                  kappa_sub=r["kappa_sub_mean"] if r["kappa_sub_mean"] > 0 else 1.0,
                                  n_sub=cfg.solver.n_sub, xi_ext=cfg.solver.xi_ext,
                                  xi_int=cfg.solver.xi_int,
                                  xi_vqls=cfg.solver.vqls.threshold)
        preds.append(predict_complexity(model, r["N"], params))
    scale = rows[0]["t_total_s"] / preds[0]
    for r, p in zip(rows, preds):
        r["predicted_s"] = p * scale
    result = {
        "rows": rows,
        "exponent_hybrid": fit_exponent(N, [r["t_total_s"] for r in rows]),
        "exponent_nlogn": fit_exponent(N, [n * math.log(n) for n in N]),
        "exponent_model": fit_exponent(N, [r["predicted_s"] for r in rows]),
        "model": model,
        "polylog": POLYLOG,
        "inner": cfg.solver.inner,
        "preconditioner": cfg.solver.precond,
    }
    if cfg.bench_direct:
        result["exponent_direct"] = fit_exponent(N, [r["t_direct_s"] for r in rows])
    if out is not None:
        _write_rows(out / "bench.csv", rows)
        _write_json(out / "summary.json", {"kind": "bench", **{k: v for k, v in result.items()
                                                               if k != "rows"}})
    return result


def run_bench(cfg: RunConfig, out: Path) -> int:
    with stage("bench"):
        res = bench_scaling(cfg, out)
    return EXIT_OK if all(r["converged"] for r in res["rows"]) else EXIT_NOT_CONVERGED


RUNNERS = {"solve": run_solve, "rcs": run_rcs, "mie": run_mie, "bench": run_bench,
           "compare": run_compare, "case-table": run_case_table}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg.kind`` and write its artifacts under ``cfg.out``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.kind](cfg, out)
