"""Experiment configuration: JSON-serializable dataclasses and presets.

A config file is a JSON object with the fields of :class:`ExperimentConfig`;
nested sections map onto the dataclasses below. Unknown keys are rejected.
"""
from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .channel import EdfaParams, FiberParams, GridPlan, LinkPlan
from .core import effective_length
from .ess import PamAlphabet, build_trellis, emax_for_bits
from .metrics import DispersionSchedule, schedule_from_spec
from .rx import RxChainConfig

SWEEP_VARS = (
    "power_dBm", "w", "nu", "n", "m_D", "N_D", "block_length", "sequence_length", "subsample_size",
)
SELECTOR_KINDS = ("none", "edi", "d_edi", "ssfm")


@dataclass
class LinkConfig:
    n_spans: int = 1
    fiber: FiberParams = field(default_factory=lambda: FiberParams(length=205.0))
    edfa: EdfaParams = field(default_factory=EdfaParams)
    step_km: float = 0.1
    pmd_on: bool = False

    def plan(self) -> LinkPlan:
        return LinkPlan.uniform(self.n_spans, self.fiber, self.edfa, self.step_km, self.pmd_on)


@dataclass
class DmConfig:
    """ESS chain. ``E_max=None`` picks the smallest bound giving ``k >= ceil(rate * l) + nu``."""

    l: int = 108
    n: int = 1
    nu: int = 0
    rate: float = 1.5
    E_max: int | None = None
    alphabet: tuple[int, ...] = (1, 3, 5, 7)
    code_rate: float = 5 / 6
    sign_info_fraction: float | None = None

    def k_target(self) -> int:
        return int(np.ceil(self.rate * self.l - 1e-9)) + self.nu

    def resolved_emax(self) -> int:
        if self.E_max is not None:
            return int(self.E_max)
        return emax_for_bits(self.l, PamAlphabet(tuple(self.alphabet)), self.k_target())

    def trellis(self):
        return build_trellis(self.l, PamAlphabet(tuple(self.alphabet)), self.resolved_emax())


@dataclass
class SelectorConfig:
    """Sequence selector.

    ``schedule`` is ``{"m_D": int}``, ``{"N_D": int}``, ``{"spans": [...]}``
    or ``"leff"`` (positions 0 and one effective length, for single spans).
    ``step_km=None`` uses the span length.
    """

    kind: str = "none"
    w: int = 2
    schedule: Any = "leff"
    step_km: float | None = None
    subsample: int | None = None
    oracle_step_km: float | None = None
    oracle_sps: int = 2


@dataclass
class SweepConfig:
    var: str = "power_dBm"
    values: list = field(default_factory=lambda: [9.0])


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    scenario: str = "single_span"
    launch_power_dBm: float = 9.0
    grid: GridPlan = field(default_factory=GridPlan)
    link: LinkConfig = field(default_factory=LinkConfig)
    dm: DmConfig = field(default_factory=DmConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    rx: RxChainConfig = field(default_factory=RxChainConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    n_symbols: int = 16384
    n_blocks: int | None = None
    repetitions: int = 1
    eval_edi_w: int = 40
    eval_d_edi_w: int = 2
    seed: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in ("single_span", "multi_span"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.selector.kind not in SELECTOR_KINDS:
            raise ValueError(f"unknown selector kind {self.selector.kind!r}")
        if self.sweep.var not in SWEEP_VARS:
            raise ValueError(f"unknown sweep variable {self.sweep.var!r}")
        if not self.sweep.values:
            raise ValueError("sweep needs at least one value")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for value in self.sweep.values:
            pt = self.at(value)
            if pt.selector.kind in ("edi", "d_edi") and (pt.selector.w < 2 or pt.selector.w % 2):
                raise ValueError("selector window must be an even integer >= 2")
            if pt.dm.nu < 0 or pt.dm.n < 1:
                raise ValueError("need n >= 1 and nu >= 0")
            if (pt.dm.l * pt.dm.n) % 4:
                raise ValueError("l * n must be a multiple of 4")
            l_s = pt.dm.l * pt.dm.n // 4
            if pt.selector.kind in ("edi", "d_edi") and pt.selector.w > l_s - 2:
                raise ValueError(f"window {pt.selector.w} too long for {l_s}-symbol candidates")
            if pt.selector.subsample is not None and pt.selector.subsample > 1 << (pt.dm.nu * pt.dm.n):
                raise ValueError("subsample larger than the candidate set")
            pt.selector_schedule()
        return self

    # --- sweep resolution -------------------------------------------------

    def at(self, value) -> "ExperimentConfig":
        """Copy of this config with the sweep variable set to ``value``."""
        cfg = copy.deepcopy(self)
        var = self.sweep.var
        if var == "power_dBm":
            cfg.launch_power_dBm = float(value)
        elif var == "w":
            cfg.selector.w = int(value)
        elif var == "nu":
            cfg.dm.nu = int(value)
        elif var == "n":
            cfg.dm.n = int(value)
        elif var == "m_D":
            cfg.selector.schedule = {"m_D": int(value)}
        elif var == "N_D":
            cfg.selector.schedule = {"N_D": int(value)}
        elif var == "block_length":
            cfg.dm.l = int(value)
            cfg.dm.E_max = None
        elif var == "sequence_length":
            n4 = 4 * int(value)
            if n4 % cfg.dm.l:
                raise ValueError(f"sequence length {value} is not a whole number of l={cfg.dm.l} blocks")
            cfg.dm.n = n4 // cfg.dm.l
        elif var == "subsample_size":
            cfg.selector.subsample = None if value in (None, 0) else int(value)
        return cfg

    def selection_step_km(self) -> float:
        sel = self.selector
        if sel.step_km is not None:
            return float(sel.step_km)
        if sel.schedule == "leff":
            f = self.link.fiber
            return effective_length(f.alpha_dB, f.length)
        return float(self.link.fiber.length)

    def selector_schedule(self) -> DispersionSchedule:
        f = self.link.fiber
        spec = (0, 1) if self.selector.schedule == "leff" else self.selector.schedule
        return schedule_from_spec(spec, f.D, f.wavelength_nm, self.selection_step_km())

    def evaluation_schedule(self) -> DispersionSchedule:
        """Whole-link D-EDI positions used to score the transmitted sequences."""
        f = self.link.fiber
        if self.link.n_spans == 1:
            return DispersionSchedule(f.D, f.wavelength_nm, effective_length(f.alpha_dB, f.length), (0, 1))
        return DispersionSchedule.first_spans(self.link.n_spans - 1, f.D, f.wavelength_nm, f.length)

    # --- (de)serialization ------------------------------------------------

    def to_dict(self) -> dict:
        return _to_jsonable(dataclasses.asdict(self))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return _build(cls, d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def resolved(self) -> dict:
        """Config plus derived values (E_max, k, step sizes) for every sweep point."""
        points = []
        for v in self.sweep.values:
            pt = self.at(v)
            tr = pt.dm.trellis()
            points.append({
                "value": v,
                "E_max": tr.E_max,
                "k": tr.k,
                "info_bits_per_dm": tr.k - pt.dm.nu,
                "selection_step_km": pt.selection_step_km() if pt.selector.kind == "d_edi" else None,
                "schedule": list(pt.selector_schedule().span_indices) if pt.selector.kind == "d_edi" else None,
            })
        return {"config": self.to_dict(), "ssfm_step_km": self.link.step_km, "points": points}


_NESTED = {
    "grid": GridPlan,
    "link": LinkConfig,
    "dm": DmConfig,
    "selector": SelectorConfig,
    "rx": RxChainConfig,
    "sweep": SweepConfig,
    "fiber": FiberParams,
    "edfa": EdfaParams,
}


def _build(cls, d: dict):
    if not isinstance(d, dict):
        raise ValueError(f"expected an object for {cls.__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kw = {}
    for k, v in d.items():
        if k in _NESTED and isinstance(v, dict):
            kw[k] = _build(_NESTED[k], v)
        elif k == "alphabet":
            kw[k] = tuple(v)
        else:
            kw[k] = v
    return cls(**kw)


def _to_jsonable(x):
    if isinstance(x, dict):
        return {k: _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("dss.presets").iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> ExperimentConfig:
    """Load a shipped preset by file stem, e.g. ``fig4_single_span``."""
    try:
        text = resources.files("dss.presets").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise ValueError(f"no preset {name!r}; available: {', '.join(preset_names())}") from None
    return ExperimentConfig.from_json(text)


def load_config(ref: str | Path) -> ExperimentConfig:
    """A config file path, or the name of a shipped preset."""
    p = Path(ref)
    if p.exists():
        return ExperimentConfig.load(p)
    return load_preset(str(ref).removesuffix(".json"))
