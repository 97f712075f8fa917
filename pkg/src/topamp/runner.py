"""Execution of configured experiments and artifact writing."""

from __future__ import annotations

import datetime as _dt
import itertools
import logging
import math
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import (BlochSymbol, apply_params, loop_trace, phase_cell, phase_diagram, winding_roots,
                    winding_scalar)
from .config import ExperimentConfig
from .couplings import coupling_matrices
from .dynamics import evolve, initial_state, gap_scaling, photon_number, projections, saturation_time
from .dynmatrix import DriveSpec, build_bogoliubov_matrix, build_dynamical_matrix, singular_decomposition
from .errors import ConfigurationError
from .hofstadter import HofstadterSpec, band_structure, edge_modes_in_gap, gap_interval, to_waveguide_spec
from .io import sha256_file, write_csv, write_json
from .parallel import parallel_map
from .steadystate import greens_function, momentum_coherences, steady_state

log = logging.getLogger(__name__)

__all__ = ["run_experiment", "RunResult"]


class RunResult:
    def __init__(self, directory: Path, files: list[Path], summary: dict):
        self.directory = directory
        self.files = files
        self.summary = summary


class _Writer:
    """Collects output files for one run, honouring the configured formats."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.dir = cfg.output_dir
        self.files: list[Path] = []

    def csv(self, name, header, rows):
        if "csv" in self.cfg.formats:
            self.files.append(write_csv(self.dir / f"{name}.csv", header, rows))

    def json(self, name, obj):
        if "json" in self.cfg.formats:
            self.files.append(write_json(self.dir / f"{name}.json", obj))


def _points(cfg: ExperimentConfig) -> list[dict]:
    if not cfg.axes:
        return [{}]
    grids = [a.grid() for a in cfg.axes]
    return [dict(zip([a.name for a in cfg.axes], map(float, combo))) for combo in itertools.product(*grids)]


def _setup(cfg: ExperimentConfig, params: dict, n_sites: int | None = None):
    wg, drive = apply_params(cfg.waveguide, cfg.drive, params)
    n = cfg.n_sites if n_sites is None else n_sites
    cfg_drive = cfg.drive_for(n, drive)
    return wg, cfg_drive, coupling_matrices(wg, cfg.lattice(n))


def _matrix(cm, drive: DriveSpec):
    return build_dynamical_matrix(cm, drive) if drive.g_s == 0 else build_bogoliubov_matrix(cm, drive)


def _winding(cfg: ExperimentConfig, wg, drive: DriveSpec) -> int:
    if "winding" in cfg.options:
        return int(cfg.options["winding"])
    W, *_ = phase_cell(wg, drive, n_sites=3)
    if W is None:
        raise ConfigurationError("bulk gap closes at this parameter point: winding undefined")
    return max(int(W), 0)


def _param_names(cfg):
    return [a.name for a in cfg.axes]


def _pvals(cfg, params):
    return [params[n] for n in _param_names(cfg)]


# ---------------------------------------------------------------------------
# tasks


def _task_couplings(cfg, w: _Writer, workers):
    rows, dump = [], []
    for params in _points(cfg):
        _, _, cm = _setup(cfg, params)
        for i in range(cm.n_sites):
            for j in range(cm.n_sites):
                rows.append(_pvals(cfg, params) + [i, j, cm.J[i, j], cm.gamma[i, j]])
        dump.append({"params": params, "J": cm.J, "Gamma": cm.gamma, "positions": cm.positions})
    w.csv("couplings", _param_names(cfg) + ["i", "j", "J", "Gamma"], rows)
    w.json("couplings", dump)
    return {"points": len(dump)}


def _winding_task(args):
    cfg, params = args
    wg, drive = apply_params(cfg.waveguide, cfg.drive, params)
    n_grid = cfg.options.get("n_grid", 4096)
    sym = BlochSymbol(wg, drive.pump)
    W, stable, max_im, closed = phase_cell(wg, drive, n_grid, cfg.options.get("n_sites_stability", 60),
                                           cfg.options.get("winding_method", "det"))
    res = winding_scalar(sym, n_grid) if drive.g_s == 0 and drive.delta == 0 else None
    roots = winding_roots(sym, drive.delta) if drive.g_s == 0 and wg.chirality == "right" else None
    return W, stable, max_im, closed, (res.raw if res else None), roots


def _task_winding(cfg, w: _Writer, workers):
    pts = _points(cfg)
    results = parallel_map(_winding_task, [(cfg, p) for p in pts], workers)
    names = _param_names(cfg)
    rows = [_pvals(cfg, p) + list(r) for p, r in zip(pts, results)]
    w.csv("winding", names + ["W", "stable", "max_im", "gap_closed", "raw", "W_roots"], rows)
    n_loop = cfg.options.get("loop_points", 0)
    if n_loop:
        loops = []
        for p in pts:
            wg, drive = apply_params(cfg.waveguide, cfg.drive, p)
            k, re, im = loop_trace(BlochSymbol(wg, drive.pump), n_loop)
            loops.extend(_pvals(cfg, p) + [kk, a, b] for kk, a, b in zip(k, re, im))
        w.csv("loops", names + ["k", "re_h", "im_h"], loops)
    summary = {"W": [r[0] for r in results]}
    w.json("winding", {"points": pts, "W": summary["W"], "stable": [r[1] for r in results]})
    return summary


def _task_phase_diagram(cfg, w: _Writer, workers):
    grid = phase_diagram(cfg.waveguide, cfg.axes, cfg.drive, cfg.options.get("n_grid", 4096),
                         cfg.options.get("n_sites_stability", 60), workers,
                         cfg.options.get("winding_method", "det"))
    ax, ay = cfg.axes
    w.csv("phase_diagram", [ax.name, ay.name, "W", "stable", "max_im"], grid.rows())
    summary = {"windings": sorted(grid.windings()), "stable_windings": sorted(grid.windings(True))}
    w.json("phase_diagram", {"x_axis": ax.name, "y_axis": ay.name, "x": grid.x, "y": grid.y,
                             "W": grid.W, "stable": grid.stable, **summary})
    if cfg.plot:
        from .plotting import plot_phase_diagram
        w.files.append(plot_phase_diagram(grid, w.dir / "phase_diagram.png"))
    return summary


def _task_steady_state(cfg, w: _Writer, workers):
    names = _param_names(cfg)
    b_rows, k_rows, p_rows, s_rows, summ = [], [], [], [], []
    for params in _points(cfg):
        wg, drive, cm = _setup(cfg, params)
        dm = _matrix(cm, drive)
        W = _winding(cfg, wg, drive)
        ss = steady_state(dm, drive, cfg.options.get("method", "direct_solve"), W)
        svd = singular_decomposition(dm, W)
        pv = _pvals(cfg, params)
        b_rows.extend(pv + list(r) for r in ss.rows())
        s_rows.extend(pv + [n, s, n in set(svd.edge_set.tolist())] for n, s in enumerate(svd.S))
        entry = {"params": params, "W": W, "delta_obc": svd.delta_obc, "delta_pbc": svd.delta_pbc,
                 "correspondence_broken": svd.correspondence_broken, "residual": ss.residual}
        if drive.g_s == 0:
            prof = momentum_coherences(ss, pad=cfg.options.get("pad", 1))
            k_rows.extend(pv + list(r) for r in prof.rows())
            p_rows.extend(pv + [p.k, p.height, p.width] for p in prof.peaks)
            entry["n_peaks"] = prof.n_peaks
        summ.append(entry)
    w.csv("b_ss", names + ["site", "re", "im", "abs"], b_rows)
    w.csv("singular_values", names + ["n", "s", "edge"], s_rows)
    if k_rows:
        w.csv("momentum", names + ["k", "re", "im", "abs"], k_rows)
        w.csv("peaks", names + ["k", "height", "width"], p_rows)
    w.json("steady_state", summ)
    return {"n_peaks": [e.get("n_peaks") for e in summ], "W": [e["W"] for e in summ]}


def _task_greens(cfg, w: _Writer, workers):
    names = _param_names(cfg)
    g_rows, e_rows = [], []
    omega = float(cfg.options.get("omega", 0.0))
    for params in _points(cfg):
        wg, drive, cm = _setup(cfg, params)
        dm = _matrix(cm, drive)
        G = greens_function(dm, omega)
        pv = _pvals(cfg, params)
        n = G.shape[0]
        g_rows.extend(pv + [i, j, abs(G[i, j])] for i in range(n) for j in range(n))
        S = singular_decomposition(dm).S
        lam = np.sort(np.concatenate([-S, S]))
        e_rows.extend(pv + [m, v] for m, v in enumerate(lam))
    w.csv("greens_abs", names + ["i", "j", "abs_G"], g_rows)
    w.csv("doubled_eigenvalues", names + ["index", "lambda"], e_rows)
    return {"omega": omega}


def _dyn_times(cfg) -> np.ndarray:
    o = cfg.options
    if "times" in o:
        return np.asarray(o["times"], dtype=float)
    scale = o.get("time_scale", "log")
    if scale == "log":
        return np.geomspace(o.get("t_min", 1e-2), o.get("t_max", 1e3), o.get("n_times", 200))
    if scale == "linear":
        return np.linspace(o.get("t_min", 0.0), o.get("t_max", 1e3), o.get("n_times", 200))
    raise ConfigurationError(f"options.time_scale: must be 'log' or 'linear', got {scale!r}")


def _initial(cfg, preset: str, n: int, dm, W: int):
    if preset in ("uniform", "edge-drive"):
        b0 = initial_state(preset, n)
        return np.concatenate([b0, b0.conj()]) if dm.kind == "bogoliubov" else b0, None
    svd = singular_decomposition(dm, W)
    V = svd.V
    if preset == "edge-subspace":
        if W == 0:
            raise ConfigurationError("options.initial: edge-subspace needs a topological phase (W >= 1)")
        if W == 3:
            weights = np.array([0.5, 0.5, 1 / math.sqrt(2)])
        else:
            weights = np.full(W, 1 / math.sqrt(W))
        return V[:, svd.edge_set] @ weights, svd
    if preset == "singular-vector":
        m = cfg.options.get("singular_index", 0)
        if not 0 <= m < V.shape[1]:
            raise ConfigurationError(f"options.singular_index: {m} outside [0, {V.shape[1]})")
        return V[:, m].copy(), svd
    raise ConfigurationError(f"options.initial: unknown preset {preset!r}")


def _task_dynamics(cfg, w: _Writer, workers):
    names = _param_names(cfg)
    times = _dyn_times(cfg)
    sizes = cfg.options.get("sizes", [cfg.n_sites])
    preset = cfg.options.get("initial", "uniform")
    profile_times = cfg.options.get("profile_times")
    ts_rows, pr_rows, pj_rows, summ = [], [], [], []
    for params in _points(cfg):
        for n in sizes:
            wg, drive, cm = _setup(cfg, params, int(n))
            dm = _matrix(cm, drive)
            W = _winding(cfg, wg, drive)
            b0, svd = _initial(cfg, preset, int(n), dm, W)
            traj = evolve(dm, drive, b0, times)
            nph = photon_number(traj)
            counts = traj.peak_counts() if dm.kind == "normal" else np.full(times.size, -1)
            pv = _pvals(cfg, params)
            ts_rows.extend(pv + [n, t, x, c] for t, x, c in zip(times, nph, counts))
            if dm.kind == "normal":
                sel = range(times.size) if profile_times is None else [
                    int(np.argmin(np.abs(times - pt))) for pt in profile_times]
                for i in sel:
                    prof = traj.k_profiles[i]
                    pr_rows.extend(pv + [n, times[i], k, abs(b)] for k, b in zip(prof.k_grid, prof.bk))
            if svd is not None:
                ps = projections(traj, svd)
                edge = set(ps.edge_indices.tolist())
                for m in range(ps.p.shape[0]):
                    pj_rows.extend(pv + [n, t, m, p, m in edge] for t, p in zip(times, ps.p[m]))
            summ.append({"params": params, "n_sites": int(n), "W": W, "photon_number_final": float(nph[-1]),
                         "saturation_time": saturation_time(times, nph),
                         "peaks_first": int(counts[0]), "peaks_last": int(counts[-1])})
    w.csv("timeseries", names + ["n_sites", "t", "photon_number", "n_peaks"], ts_rows)
    if pr_rows:
        w.csv("momentum_profiles", names + ["n_sites", "t", "k", "abs_bk"], pr_rows)
    if pj_rows:
        w.csv("projections", names + ["n_sites", "t", "n", "p", "edge"], pj_rows)
    w.json("dynamics", summ)
    return {"runs": len(summ)}


def _task_gap_scaling(cfg, w: _Writer, workers):
    sizes = cfg.options.get("sizes", [20, 40, 60, 80])
    out = []
    for params in _points(cfg):
        wg, drive = apply_params(cfg.waveguide, cfg.drive, params)
        W = cfg.options.get("winding")
        gs = gap_scaling(wg, drive, sizes, W)
        out.append((params, gs))
    names = _param_names(cfg)
    rows = [_pvals(cfg, p) + list(r) for p, gs in out for r in gs.rows()]
    w.csv("gap_scaling", names + ["n_sites", "delta_obc", "delta_pbc", "correspondence_broken"], rows)
    fits = [{"params": p, "W": gs.winding, "slope": gs.slope, "intercept": gs.intercept, "r2": gs.r2,
             "delta_pbc_variation": gs.pbc_variation} for p, gs in out]
    w.json("gap_scaling", fits)
    return {"r2": [f["r2"] for f in fits]}


def _task_hofstadter(cfg, w: _Writer, workers):
    h = cfg.hofstadter
    spec = HofstadterSpec(h["q"], h["L"], float(h.get("J_hop", 1.0)), h.get("n_ky", 512))
    bs = band_structure(spec, workers)
    w.csv("bands", ["ky", "E", "eta"], bs.rows())
    gaps = h.get("gaps", [1])
    tables, wgs = [], []
    for i, n in enumerate(gaps):
        if "omega_c" in h:
            wc = float(h["omega_c"][i])
        else:
            lo, hi = gap_interval(spec, n)
            wc = 0.5 * (lo + hi)
        table = edge_modes_in_gap(spec, n, wc, float(h.get("eta_cut", -0.9)))
        tables.append(table.to_dict())
        if "g" in h and "l_kappa" in h and table.count:
            wgs.append({"gap": n, **to_waveguide_spec(table, h["g"], h["l_kappa"]).to_dict()})
    w.json("edge_modes", tables)
    if wgs:
        w.json("waveguides", wgs)
    return {"crossings": [len(t["crossings"]) for t in tables]}


_TASKS = {
    "couplings": _task_couplings,
    "winding": _task_winding,
    "phase-diagram": _task_phase_diagram,
    "steady-state": _task_steady_state,
    "greens": _task_greens,
    "dynamics": _task_dynamics,
    "gap-scaling": _task_gap_scaling,
    "hofstadter": _task_hofstadter,
}


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> RunResult:
    """Run one configured task and write its data files plus ``manifest.json``."""
    t0 = time.perf_counter()
    writer = _Writer(cfg)
    summary = _TASKS[cfg.task](cfg, writer, workers)
    wall = time.perf_counter() - t0
    manifest = {
        "task": cfg.task,
        "config_name": cfg.name,
        "config_sha256": cfg.sha256,
        "library_version": __version__,
        "seed": cfg.seed,
        "wall_time_s": wall,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "files": {f.name: sha256_file(f) for f in writer.files},
        "summary": summary,
    }
    writer.files.append(write_json(writer.dir / "manifest.json", manifest))
    return RunResult(writer.dir, writer.files, summary)
