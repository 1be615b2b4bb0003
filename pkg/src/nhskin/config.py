"""Experiment configuration: dataclasses, bundled presets, and the
INI-style key-value file format with sections [model], [wavepacket],
[grid], [analysis]."""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .grids import KGrid, Window
from .models import BlochModel, ModelParams, build_custom, build_ordinary_model, build_symplectic_hn
from .wavepacket import GaussianSpec

SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class ModelConfig:
    name: str = "symplectic_hn"      # symplectic_hn | ordinary | custom
    t_h: float = 2.0
    g: float = 0.8
    delta: float = 0.1
    q: int = 1
    l: int = 1
    hoppings: Tuple[Tuple[int, int, int, float, float], ...] = ()

    def __post_init__(self):
        if self.name not in ("symplectic_hn", "ordinary", "custom"):
            raise ValueError(f"unknown model name {self.name!r}")
        if self.name == "custom" and not self.hoppings:
            raise ValueError("custom model needs explicit hopping entries")


@dataclass(frozen=True)
class GridConfig:
    n_sites: int = 120
    window: str = "0_2pi"            # 0_2pi | pm_pi

    def __post_init__(self):
        if self.window not in ("0_2pi", "pm_pi"):
            raise ValueError(f"unknown window {self.window!r}")


@dataclass(frozen=True)
class AnalysisConfig:
    t_max: float = 30.0
    dt: float = 0.1
    prominence: float = 0.2          # fraction of the rate-function range
    scan_re_min: float = -3.0
    scan_re_max: float = 3.0
    scan_im_min: float = -3.0
    scan_im_max: float = 3.0
    scan_resolution: float = 0.05
    scan_nk: int = 256
    gbz_eps0: Tuple[Tuple[float, float], ...] = ((0.0, 0.0),)
    scaling_n: Tuple[int, ...] = (80, 100, 120)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = ModelConfig()
    wavepacket: GaussianSpec = GaussianSpec(k0_plus=float(np.pi),
                                            k0_minus=float(np.pi),
                                            n0_plus=60.0, n0_minus=60.0,
                                            sigma=0.4, c_plus=SQRT_HALF,
                                            c_minus=SQRT_HALF)
    grid: GridConfig = GridConfig()
    analysis: AnalysisConfig = AnalysisConfig()


def build_model(cfg: ExperimentConfig) -> BlochModel:
    m = cfg.model
    if m.name == "symplectic_hn":
        return build_symplectic_hn(ModelParams(t_h=m.t_h, g=m.g, delta=m.delta))
    if m.name == "ordinary":
        return build_ordinary_model()
    return build_custom(m.q, m.l, m.hoppings)


def build_kgrid(cfg: ExperimentConfig) -> KGrid:
    return KGrid(cfg.grid.n_sites, Window(cfg.grid.window))


def build_times(cfg: ExperimentConfig) -> np.ndarray:
    a = cfg.analysis
    return np.arange(0.0, a.t_max + 0.5 * a.dt, a.dt)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _symplectic_wavepacket(k0_plus, k0_minus, n0_plus=60.0, n0_minus=60.0,
                           c_plus=SQRT_HALF, c_minus=SQRT_HALF) -> GaussianSpec:
    return GaussianSpec(k0_plus=k0_plus, k0_minus=k0_minus, n0_plus=n0_plus,
                        n0_minus=n0_minus, sigma=0.4, c_plus=c_plus, c_minus=c_minus)


def _dqpt_preset(n_sites: int) -> ExperimentConfig:
    return ExperimentConfig(
        wavepacket=_symplectic_wavepacket(float(np.pi), float(np.pi),
                                          n_sites / 2.0, n_sites / 2.0),
        grid=GridConfig(n_sites=n_sites),
        analysis=AnalysisConfig(t_max=100.0, dt=0.1),
    )


def _ordinary_preset(window: str) -> ExperimentConfig:
    k0 = float(np.pi / 9)  # inside both window conventions
    return ExperimentConfig(
        model=ModelConfig(name="ordinary"),
        wavepacket=GaussianSpec(k0_plus=k0, k0_minus=0.0, n0_plus=60.0,
                                n0_minus=0.0, sigma=0.4, c_plus=1.0, c_minus=0.0),
        grid=GridConfig(n_sites=120, window=window),
        analysis=AnalysisConfig(t_max=30.0, dt=0.1, scan_nk=512,
                                gbz_eps0=((1.0, 0.0), (-1.0, 0.0), (3.0, 3.0))),
    )


_C_DIFF_NORM = float(np.sqrt(0.5 ** 2 + 0.8 ** 2))

_PRESETS = {
    "fig1-case1": lambda: ExperimentConfig(
        wavepacket=_symplectic_wavepacket(float(np.pi), float(np.pi))),
    "fig1-case2": lambda: ExperimentConfig(
        wavepacket=_symplectic_wavepacket(float(7 * np.pi / 5), float(3 * np.pi / 5))),
    "fig1-case3": lambda: ExperimentConfig(
        wavepacket=_symplectic_wavepacket(float(3 * np.pi / 2), float(np.pi / 2))),
    "fig2-dqpt-N120": lambda: _dqpt_preset(120),
    "fig2-dqpt-N100": lambda: _dqpt_preset(100),
    "fig2-dqpt-N80": lambda: _dqpt_preset(80),
    "supp-ordinary-win02pi": lambda: _ordinary_preset("0_2pi"),
    "supp-ordinary-winpm": lambda: _ordinary_preset("pm_pi"),
    "supp-winding-control": lambda: ExperimentConfig(
        wavepacket=_symplectic_wavepacket(float(np.pi), float(np.pi)),
        analysis=AnalysisConfig(gbz_eps0=((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)))),
    "supp-n0-different": lambda: ExperimentConfig(
        wavepacket=_symplectic_wavepacket(float(np.pi), float(np.pi), 30.0, 90.0)),
    "supp-c-different": lambda: ExperimentConfig(
        wavepacket=_symplectic_wavepacket(float(np.pi), float(np.pi), 30.0, 90.0,
                                          c_plus=0.5 / _C_DIFF_NORM,
                                          c_minus=0.8 / _C_DIFF_NORM)),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> ExperimentConfig:
    """A fully populated configuration for one of the bundled scenarios."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return factory()


# ---------------------------------------------------------------------------
# key-value config files
# ---------------------------------------------------------------------------

def serialize_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    m = cfg.model
    cp["model"] = {"name": m.name, "t_h": repr(m.t_h), "g": repr(m.g),
                   "delta": repr(m.delta)}
    if m.name == "custom":
        cp["model"]["q"] = str(m.q)
        cp["model"]["l"] = str(m.l)
        cp["model"]["hoppings"] = "\n".join(
            f"{r},{i},{j},{repr(re)},{repr(im)}" for r, i, j, re, im in m.hoppings)
    w = cfg.wavepacket
    cp["wavepacket"] = {
        "k0_plus": repr(w.k0_plus), "k0_minus": repr(w.k0_minus),
        "n0_plus": repr(w.n0_plus), "n0_minus": repr(w.n0_minus),
        "sigma": repr(w.sigma), "c_plus": repr(w.c_plus), "c_minus": repr(w.c_minus),
    }
    if w.sigma_minus is not None:
        cp["wavepacket"]["sigma_minus"] = repr(w.sigma_minus)
    cp["grid"] = {"n_sites": str(cfg.grid.n_sites), "window": cfg.grid.window}
    a = cfg.analysis
    cp["analysis"] = {
        "t_max": repr(a.t_max), "dt": repr(a.dt), "prominence": repr(a.prominence),
        "scan_re_min": repr(a.scan_re_min), "scan_re_max": repr(a.scan_re_max),
        "scan_im_min": repr(a.scan_im_min), "scan_im_max": repr(a.scan_im_max),
        "scan_resolution": repr(a.scan_resolution), "scan_nk": str(a.scan_nk),
        "gbz_eps0": "; ".join(f"{repr(re)},{repr(im)}" for re, im in a.gbz_eps0),
        "scaling_n": ",".join(str(n) for n in a.scaling_n),
    }
    out = io.StringIO()
    cp.write(out)
    return out.getvalue()


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    ms = cp["model"]
    hoppings = ()
    if ms.get("hoppings", "").strip():
        rows = []
        for line in ms["hoppings"].strip().splitlines():
            r, i, j, re, im = line.strip().split(",")
            rows.append((int(r), int(i), int(j), float(re), float(im)))
        hoppings = tuple(rows)
    model = ModelConfig(name=ms.get("name", "symplectic_hn"),
                        t_h=ms.getfloat("t_h", 2.0), g=ms.getfloat("g", 0.8),
                        delta=ms.getfloat("delta", 0.1),
                        q=ms.getint("q", 1), l=ms.getint("l", 1), hoppings=hoppings)
    ws = cp["wavepacket"]
    sigma_minus = ws.getfloat("sigma_minus") if "sigma_minus" in ws else None
    wave = GaussianSpec(k0_plus=ws.getfloat("k0_plus"),
                        k0_minus=ws.getfloat("k0_minus", 0.0),
                        n0_plus=ws.getfloat("n0_plus", 0.0),
                        n0_minus=ws.getfloat("n0_minus", 0.0),
                        sigma=ws.getfloat("sigma", 0.4),
                        c_plus=ws.getfloat("c_plus", 1.0),
                        c_minus=ws.getfloat("c_minus", 0.0),
                        sigma_minus=sigma_minus)
    gs = cp["grid"]
    grid = GridConfig(n_sites=gs.getint("n_sites", 120),
                      window=gs.get("window", "0_2pi"))
    asec = cp["analysis"] if cp.has_section("analysis") else {}

    def getf(key, default):
        return float(asec.get(key, default)) if key in asec else default

    gbz = tuple(
        (float(pair.split(",")[0]), float(pair.split(",")[1]))
        for pair in asec.get("gbz_eps0", "").split(";") if pair.strip()
    ) or ((0.0, 0.0),)
    scaling = tuple(int(x) for x in asec.get("scaling_n", "").split(",") if x.strip()) \
        or (80, 100, 120)
    analysis = AnalysisConfig(
        t_max=getf("t_max", 30.0), dt=getf("dt", 0.1),
        prominence=getf("prominence", 0.2),
        scan_re_min=getf("scan_re_min", -3.0), scan_re_max=getf("scan_re_max", 3.0),
        scan_im_min=getf("scan_im_min", -3.0), scan_im_max=getf("scan_im_max", 3.0),
        scan_resolution=getf("scan_resolution", 0.05),
        scan_nk=int(asec.get("scan_nk", 256)),
        gbz_eps0=gbz, scaling_n=scaling,
    )
    return ExperimentConfig(model=model, wavepacket=wave, grid=grid, analysis=analysis)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))
