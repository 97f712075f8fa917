"""Experiment configuration: strict TOML schema and conversion to library objects.

A configuration is a TOML document with the top-level keys ``task``,
``seed`` and ``description`` plus the sections ``waveguide``, ``lattice``,
``drive``, ``sweep``, ``options``, ``hofstadter`` and ``output``. Unknown keys
anywhere are rejected with their dotted path.
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bloch import AxisSpec
from .couplings import LatticeSpec, WaveguideSpec
from .dynmatrix import DriveSpec
from .errors import ConfigurationError
from .hofstadter import HofstadterSpec

__all__ = ["TASKS", "ExperimentConfig", "load_config", "parse_config", "preset_path", "list_presets"]

TASKS = ("couplings", "winding", "phase-diagram", "steady-state", "greens", "dynamics", "gap-scaling",
         "hofstadter")

_FLOAT = (int, float)
_LIST = list


def _req(kind):
    return ("required", kind)


# key -> accepted python types; tuples ``("required", types)`` mark mandatory keys
_SCHEMA: dict[str, dict[str, Any]] = {
    "": {"task": _req(str), "seed": int, "description": str},
    "waveguide": {"k_res": _LIST, "k_res_over_pi": _LIST, "gamma_per_mode": _LIST, "gamma_total": _FLOAT,
                  "l_kappa": _FLOAT, "chirality": str},
    "lattice": {"n_sites": int, "positions": _LIST},
    "drive": {"pump": _FLOAT, "g_s": _FLOAT, "delta": _FLOAT, "parametric_factor": int,
              "drive_site": int, "drive_amplitude": _FLOAT},
    "sweep": {"axes": _LIST},
    "axis": {"name": _req(str), "min": _FLOAT, "max": _FLOAT, "n_points": int, "scale": str,
             "values": _LIST, "values_over_pi": _LIST},
    "options": {"n_grid": int, "loop_points": int, "n_sites_stability": int, "method": str, "pad": int,
                "omega": _FLOAT, "times": _LIST, "t_min": _FLOAT, "t_max": _FLOAT, "n_times": int, "time_scale": str,
                "initial": str, "singular_index": int, "sizes": _LIST, "profile_times": _LIST,
                "winding": int, "winding_method": str},
    "hofstadter": {"q": _req(int), "L": _req(int), "J_hop": _FLOAT, "n_ky": int, "gaps": _LIST,
                   "omega_c": _LIST, "eta_cut": _FLOAT, "g": _FLOAT, "l_kappa": _FLOAT},
    "output": {"directory": str, "formats": _LIST, "plot": bool},
}

# options each task understands
_TASK_OPTIONS = {
    "couplings": set(),
    "winding": {"n_grid", "loop_points", "n_sites_stability", "winding_method"},
    "phase-diagram": {"n_grid", "n_sites_stability", "winding_method"},
    "steady-state": {"method", "pad", "winding"},
    "greens": {"omega"},
    "dynamics": {"times", "t_min", "t_max", "n_times", "time_scale", "initial", "singular_index", "sizes", "profile_times",
                 "pad", "winding"},
    "gap-scaling": {"sizes", "winding"},
    "hofstadter": set(),
}

_SWEEPABLE = ("l_kappa", "pump", "g_s", "delta", "dk")


def _check_type(path: str, value, kind) -> None:
    if kind is _FLOAT:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        name = {_FLOAT: "number", int: "integer", str: "string", _LIST: "list", bool: "boolean"}.get(kind, kind)
        raise ConfigurationError(f"{path}: expected {name}, got {type(value).__name__}")


def _validate_table(path: str, table: dict, schema: dict) -> None:
    for key, value in table.items():
        kp = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigurationError(f"{kp}: unknown key")
        kind = schema[key]
        if isinstance(kind, tuple) and kind and kind[0] == "required":
            kind = kind[1]
        _check_type(kp, value, kind)
    for key, kind in schema.items():
        if isinstance(kind, tuple) and kind and kind[0] == "required" and key not in table:
            raise ConfigurationError(f"{path + '.' if path else ''}{key}: required key missing")


def _numbers(path: str, values, kind=float) -> list:
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not isinstance(v, int)):
            raise ConfigurationError(f"{path}[{i}]: expected {'integer' if kind is int else 'number'}")
        out.append(kind(v))
    return out


@dataclass
class ExperimentConfig:
    task: str
    raw: dict
    source_bytes: bytes
    name: str = "experiment"
    seed: int = 0
    description: str = ""
    waveguide: WaveguideSpec | None = None
    n_sites: int = 100
    positions: tuple[float, ...] | None = None
    drive: DriveSpec = field(default_factory=DriveSpec)
    drive_site: int = 0
    drive_amplitude: float = 1.0
    axes: list[AxisSpec] = field(default_factory=list)
    options: dict = field(default_factory=dict)
    hofstadter: dict | None = None
    output_dir: Path = Path("topamp-out")
    formats: tuple[str, ...] = ("csv", "json")
    plot: bool = False

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.source_bytes).hexdigest()

    def lattice(self, n_sites: int | None = None) -> LatticeSpec:
        n = self.n_sites if n_sites is None else n_sites
        return LatticeSpec(n, self.positions if n == self.n_sites else None)

    def drive_for(self, n_sites: int, drive: DriveSpec | None = None) -> DriveSpec:
        """Drive with the coherent amplitude placed on ``drive_site`` of an ``n_sites`` lattice."""
        d = drive or self.drive
        omega = None
        if self.drive_amplitude != 0:
            omega = DriveSpec.site_drive(n_sites, self.drive_site, self.drive_amplitude * self.waveguide.gamma_total)
        return DriveSpec(d.pump, omega, d.g_s, d.delta, d.parametric_factor)


def _waveguide(sec: dict) -> WaveguideSpec:
    if "k_res" in sec and "k_res_over_pi" in sec:
        raise ConfigurationError("waveguide: give either k_res or k_res_over_pi, not both")
    if "k_res" in sec:
        ks = _numbers("waveguide.k_res", sec["k_res"])
    elif "k_res_over_pi" in sec:
        ks = [math.pi * v for v in _numbers("waveguide.k_res_over_pi", sec["k_res_over_pi"])]
    else:
        raise ConfigurationError("waveguide.k_res: required key missing")
    if "l_kappa" not in sec:
        raise ConfigurationError("waveguide.l_kappa: required key missing")
    chir = sec.get("chirality", "right")
    if "gamma_per_mode" in sec:
        if "gamma_total" in sec:
            raise ConfigurationError("waveguide: give either gamma_per_mode or gamma_total, not both")
        g = _numbers("waveguide.gamma_per_mode", sec["gamma_per_mode"])
        return WaveguideSpec(tuple(g), tuple(ks), sec["l_kappa"], chir)
    return WaveguideSpec.equal(ks, sec["l_kappa"], float(sec.get("gamma_total", 1.0)), chir)


def _axis(i: int, tab) -> AxisSpec:
    path = f"sweep.axes[{i}]"
    if not isinstance(tab, dict):
        raise ConfigurationError(f"{path}: expected a table")
    _validate_table(path, tab, _SCHEMA["axis"])
    name = tab["name"]
    if name not in _SWEEPABLE:
        raise ConfigurationError(f"{path}.name: {name!r} is not sweepable (choose from {', '.join(_SWEEPABLE)})")
    if "values" in tab or "values_over_pi" in tab:
        if "values" in tab and "values_over_pi" in tab:
            raise ConfigurationError(f"{path}: give either values or values_over_pi")
        if "values" in tab:
            vals = _numbers(f"{path}.values", tab["values"])
        else:
            vals = [math.pi * v for v in _numbers(f"{path}.values_over_pi", tab["values_over_pi"])]
        if not vals:
            raise ConfigurationError(f"{path}.values: empty list")
        return AxisSpec(name, values=tuple(vals))
    for key in ("min", "max", "n_points"):
        if key not in tab:
            raise ConfigurationError(f"{path}.{key}: required key missing")
    if tab["n_points"] < 1:
        raise ConfigurationError(f"{path}.n_points: must be positive")
    scale = tab.get("scale", "linear")
    if scale not in ("linear", "log"):
        raise ConfigurationError(f"{path}.scale: must be 'linear' or 'log'")
    if scale == "log" and (tab["min"] <= 0 or tab["max"] <= 0):
        raise ConfigurationError(f"{path}: log axis needs positive bounds")
    return AxisSpec(name, float(tab["min"]), float(tab["max"]), int(tab["n_points"]), scale)


def parse_config(data: dict, source_bytes: bytes = b"", name: str = "experiment") -> ExperimentConfig:
    """Validate a decoded TOML document and build an :class:`ExperimentConfig`."""
    top = {k: v for k, v in data.items() if not isinstance(v, dict)}
    sections = {k: v for k, v in data.items() if isinstance(v, dict)}
    _validate_table("", top, _SCHEMA[""])
    for sec, body in sections.items():
        if sec not in _SCHEMA or sec in ("", "axis"):
            raise ConfigurationError(f"{sec}: unknown section")
        _validate_table(sec, body, _SCHEMA[sec])
    task = top["task"]
    if task not in TASKS:
        raise ConfigurationError(f"task: unknown task {task!r} (choose from {', '.join(TASKS)})")
    cfg = ExperimentConfig(task, data, source_bytes, name, top.get("seed", 0), top.get("description", ""))

    if task != "hofstadter" or "waveguide" in sections:
        if "waveguide" not in sections:
            raise ConfigurationError("waveguide: required section missing")
        cfg.waveguide = _waveguide(sections["waveguide"])

    lat = sections.get("lattice", {})
    cfg.n_sites = lat.get("n_sites", 100)
    if "positions" in lat:
        cfg.positions = tuple(_numbers("lattice.positions", lat["positions"]))
    cfg.lattice()

    drv = sections.get("drive", {})
    cfg.drive = DriveSpec(pump=float(drv.get("pump", 0.0)), g_s=float(drv.get("g_s", 0.0)),
                          delta=float(drv.get("delta", 0.0)), parametric_factor=drv.get("parametric_factor", 1))
    cfg.drive_site = drv.get("drive_site", 0)
    cfg.drive_amplitude = float(drv.get("drive_amplitude", 1.0))
    if not -cfg.n_sites <= cfg.drive_site < cfg.n_sites:
        raise ConfigurationError(f"drive.drive_site: {cfg.drive_site} outside the lattice")

    cfg.axes = [_axis(i, a) for i, a in enumerate(sections.get("sweep", {}).get("axes", []))]
    if task == "phase-diagram" and len(cfg.axes) != 2:
        raise ConfigurationError("sweep.axes: phase-diagram needs exactly two axes")
    if len({a.name for a in cfg.axes}) != len(cfg.axes):
        raise ConfigurationError("sweep.axes: duplicate axis names")

    opts = sections.get("options", {})
    for key in opts:
        if key not in _TASK_OPTIONS[task]:
            raise ConfigurationError(f"options.{key}: not used by task {task!r}")
    for key in ("times", "profile_times"):
        if key in opts:
            _numbers(f"options.{key}", opts[key])
    if "sizes" in opts:
        _numbers("options.sizes", opts["sizes"], int)
    cfg.options = dict(opts)

    if task == "hofstadter":
        if "hofstadter" not in sections:
            raise ConfigurationError("hofstadter: required section missing")
        h = dict(sections["hofstadter"])
        HofstadterSpec(h["q"], h["L"], float(h.get("J_hop", 1.0)), h.get("n_ky", 512))
        if "gaps" in h:
            _numbers("hofstadter.gaps", h["gaps"], int)
        if "omega_c" in h:
            _numbers("hofstadter.omega_c", h["omega_c"])
            if len(h["omega_c"]) != len(h.get("gaps", [1])):
                raise ConfigurationError("hofstadter.omega_c: needs one value per gap")
        cfg.hofstadter = h
    elif "hofstadter" in sections:
        raise ConfigurationError(f"hofstadter: section not used by task {task!r}")

    out = sections.get("output", {})
    cfg.output_dir = Path(out.get("directory", f"topamp-out/{name}"))
    formats = tuple(out.get("formats", ["csv", "json"]))
    for f in formats:
        if f not in ("csv", "json"):
            raise ConfigurationError(f"output.formats: unknown format {f!r}")
    cfg.formats = formats
    cfg.plot = out.get("plot", False)
    return cfg


def preset_path(name: str) -> Path:
    p = resources.files("topamp") / "presets" / f"{name}.toml"
    if not p.is_file():
        raise ConfigurationError(f"unknown preset {name!r}")
    return Path(str(p))


def list_presets() -> list[tuple[str, str]]:
    """``(name, description)`` for every bundled preset, sorted by name."""
    root = resources.files("topamp") / "presets"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".toml"):
            data = tomllib.loads(entry.read_text(encoding="utf-8"))
            out.append((entry.name[:-5], data.get("description", "")))
    return out


def load_config(path_or_preset: str | Path) -> ExperimentConfig:
    """Load a TOML file, or a bundled preset when the argument names one."""
    path = Path(path_or_preset)
    if not path.exists() and path.suffix == "":
        path = preset_path(str(path_or_preset))
    try:
        raw_bytes = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw_bytes.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"{path}: not valid TOML: {exc}") from exc
    return parse_config(data, raw_bytes, path.stem)
