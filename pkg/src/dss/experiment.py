"""End-to-end simulation of one sweep: transmit, propagate, receive, score."""
from __future__ import annotations

import copy
import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import frequency_mux, propagate_link, rrc_shape, ssfm_propagate
from .config import ExperimentConfig
from .core import DualPolSymbolBlock, dbm_to_mw, mean_power, mw_to_dbm, normalize_power
from .ess import amplitude_distribution
from .metrics import d_edi, edi
from .pas import (
    DmChainConfig,
    amplitude_label_bits,
    default_sign_info_fraction,
    n_sign_info_bits,
    rate_loss,
    sign_bit_source,
)
from .rx import receive
from .select import OracleConfig, SelectorKind, enumerate_candidates, select_min


@dataclass
class ResultRow:
    name: str
    scenario: str
    sweep_var: str
    sweep_value: float
    repetition: int
    power_dBm: float
    n_wdm: int
    n_subcarriers: int
    subcarrier_baud: float
    n_spans: int
    span_km: float
    l: int
    n: int
    nu: int
    E_max: int
    k: int
    selector: str
    w: int
    schedule: str
    selection_step_km: float
    subsample: int
    n_candidates: int
    n_s_108: float
    n_blocks: int
    n_symbols: int
    snr_elec_dB: float
    snr_err_dB: float
    gmi_bits_per_4D: float
    gmi_err: float
    rate_loss_bits_per_4D: float
    air_bits_per_4D: float
    mean_metric_of_winner: float
    winner_d_edi: float
    winner_edi: float
    wall_time_s: float = 0.0


TIMING_COLUMNS = ("wall_time_s",)


@dataclass
class BandStream:
    """Transmitted symbols of one band plus per-block winner scores."""

    symbols: DualPolSymbolBlock
    winner_metric: float
    winner_d_edi: float
    winner_edi: float


def _aligned_blocks(cfg: ExperimentConfig, l_s: int) -> int:
    """Fewest blocks giving >= ``n_symbols`` symbols with every band on the FFT bin grid."""
    if cfg.n_blocks is not None:
        return int(cfg.n_blocks)
    base = max(1, math.ceil(cfg.n_symbols / l_s))
    baud = cfg.grid.per_subcarrier_baud
    offs = [o for _, _, o in cfg.grid.offsets_ghz()]
    for nb in range(base, base + 100000):
        n_sym = nb * l_s
        if all(abs(o * n_sym / baud - round(o * n_sym / baud)) < 1e-6 for o in offs):
            return nb
    raise ValueError("no block count puts every band on the frequency grid")


def _eval_window(w: int, l_s: int) -> int:
    # largest even window that still fits the block
    return max(2, min(w, (l_s - 2) // 2 * 2))


def build_selector(cfg: ExperimentConfig, trellis) -> SelectorKind:
    sel = cfg.selector
    baud = cfg.grid.per_subcarrier_baud
    if sel.kind == "none":
        return SelectorKind("none")
    if sel.kind == "edi":
        return SelectorKind("edi", w=sel.w)
    if sel.kind == "d_edi":
        return SelectorKind("d_edi", w=sel.w, schedule=cfg.selector_schedule(), symbol_rate_gbaud=baud)
    link = cfg.link.plan().without_ase()
    if sel.oracle_step_km is not None:
        link = dataclasses.replace(link, step_km=sel.oracle_step_km, pmd_on=False)
    pa = amplitude_distribution(trellis)
    e4 = 4.0 * float(np.dot(pa, np.asarray(trellis.alphabet.amplitudes, float) ** 2))
    oracle = OracleConfig(link, baud, _band_power_dbm(cfg), cfg.grid.rolloff, sel.oracle_sps, ref_energy=e4)
    return SelectorKind("ssfm", oracle=oracle)


def _band_power_dbm(cfg: ExperimentConfig) -> float:
    return mw_to_dbm(dbm_to_mw(cfg.launch_power_dBm) / cfg.grid.n_subcarriers)


def generate_band(cfg: ExperimentConfig, chain: DmChainConfig, selector: SelectorKind, n_blocks: int,
                  seed_seq: np.random.SeedSequence) -> BandStream:
    """Run the selection loop for one band.

    Each block draws fresh information bits, builds its candidates with
    sign bits chained from the previous winner, and keeps the best one.
    """
    rng = np.random.default_rng(seed_seq)
    frac = cfg.dm.sign_info_fraction
    if frac is None:
        frac = default_sign_info_fraction(cfg.dm.code_rate)
    n_amp = chain.n_amplitudes
    n_s = n_sign_info_bits(n_amp, frac)
    sub_seeds = seed_seq.spawn(n_blocks)
    ev_sched = cfg.evaluation_schedule()
    l_s = chain.n_symbols
    w_d = _eval_window(cfg.eval_d_edi_w, l_s)
    w_e = _eval_window(cfg.eval_edi_w, l_s)
    baud = cfg.grid.per_subcarrier_baud
    parity_seed = int(seed_seq.generate_state(1)[0])

    blocks = []
    metric_sum = d_sum = e_sum = 0.0
    prev_bits = None
    for t in range(n_blocks):
        info = rng.integers(0, 2, size=chain.n * chain.info_bits_per_dm, dtype=np.uint8)
        s_bits = rng.integers(0, 2, size=n_s, dtype=np.uint8)
        signs = sign_bit_source(prev_bits, s_bits, n_amp, parity_seed)
        sub = None
        if cfg.selector.subsample is not None and selector.kind != "none":
            sub = (int(cfg.selector.subsample), int(sub_seeds[t].generate_state(1)[0]))
        elif selector.kind == "none":
            sub = (1, 0)
        cset = enumerate_candidates(info, chain, signs, sub)
        if len(cset) == 1 or selector.kind == "none":
            win, value = 0, 0.0
        else:
            win, values = select_min(cset, selector)
            value = float(values[win])
        cand = cset.candidates[win]
        blocks.append(cand.block.as_array())
        metric_sum += value
        arr = cand.block.as_array()
        d_sum += d_edi(arr, w_d, ev_sched, baud)
        e_sum += edi(arr, w_e)
        prev_bits = np.concatenate([amplitude_label_bits(cand.amplitudes), s_bits])
    frame = DualPolSymbolBlock.from_array(np.concatenate(blocks, axis=1))
    return BandStream(frame, metric_sum / n_blocks, d_sum / n_blocks, e_sum / n_blocks)


def _schedule_label(cfg: ExperimentConfig) -> str:
    if cfg.selector.kind != "d_edi":
        return ""
    return ";".join(str(i) for i in cfg.selector_schedule().span_indices)


def run_point(cfg: ExperimentConfig, value, point_index: int, repetition: int) -> ResultRow:
    """Simulate one sweep point for one repetition."""
    t0 = time.perf_counter()
    pt = cfg.at(value)
    trellis = pt.dm.trellis()
    chain = DmChainConfig(pt.dm.n, pt.dm.nu, trellis)
    selector = build_selector(pt, trellis)
    n_blocks = _aligned_blocks(pt, chain.n_symbols)
    grid = pt.grid
    bands = grid.offsets_ghz()
    p_band = dbm_to_mw(_band_power_dbm(pt))
    centre = (grid.center_channel, grid.center_subcarrier)

    # data seeds ignore the sweep point so every point sees the same bits
    waves, offsets, ref, centre_stream = [], [], None, None
    for b, (ch, sc, off) in enumerate(bands):
        stream = generate_band(pt, chain, selector, n_blocks, np.random.SeedSequence([pt.seed, repetition, b]))
        wave = rrc_shape(stream.symbols, grid.rolloff, grid.samples_per_symbol, grid.per_subcarrier_baud)
        waves.append(normalize_power(wave, p_band))
        offsets.append(off)
        if (ch, sc) == centre:
            ref, centre_stream, centre_off = stream.symbols, stream, off
    tx = frequency_mux(waves, offsets)
    noise_seed = int(np.random.SeedSequence([pt.seed, repetition, 1 << 20]).generate_state(1)[0])
    rx_wave = propagate_link(tx, pt.link.plan(), seed=noise_seed)
    f = pt.link.fiber
    px = amplitude_distribution(trellis)
    res = receive(rx_wave, ref, centre_off, grid.per_subcarrier_baud, grid.rolloff, f.D, f.wavelength_nm,
                  pt.link.plan().total_length, px, pt.rx)
    rl4 = 4.0 * rate_loss(trellis, pt.dm.nu)
    sel = pt.selector
    if sel.kind == "none":
        n_cand = 1
    else:
        n_cand = sel.subsample or chain.n_candidates
    return ResultRow(
        name=pt.name,
        scenario=pt.scenario,
        sweep_var=pt.sweep.var,
        sweep_value=float(value) if value is not None else 0.0,
        repetition=repetition,
        power_dBm=pt.launch_power_dBm,
        n_wdm=grid.n_wdm,
        n_subcarriers=grid.n_subcarriers,
        subcarrier_baud=grid.per_subcarrier_baud,
        n_spans=pt.link.n_spans,
        span_km=f.length,
        l=trellis.l,
        n=pt.dm.n,
        nu=pt.dm.nu,
        E_max=trellis.E_max,
        k=trellis.k,
        selector=sel.kind,
        w=sel.w if sel.kind in ("edi", "d_edi") else 0,
        schedule=_schedule_label(pt),
        selection_step_km=pt.selection_step_km() if sel.kind == "d_edi" else 0.0,
        subsample=sel.subsample or 0,
        n_candidates=n_cand,
        n_s_108=432.0 / (trellis.l * pt.dm.n) * n_cand if n_cand > 1 else 0.0,
        n_blocks=n_blocks,
        n_symbols=len(ref),
        snr_elec_dB=res.snr_elec_dB,
        snr_err_dB=res.snr_err_dB,
        gmi_bits_per_4D=res.gmi_bits_per_4D,
        gmi_err=res.gmi_err,
        rate_loss_bits_per_4D=rl4,
        air_bits_per_4D=res.gmi_bits_per_4D - rl4,
        mean_metric_of_winner=centre_stream.winner_metric,
        winner_d_edi=centre_stream.winner_d_edi,
        winner_edi=centre_stream.winner_edi,
        wall_time_s=time.perf_counter() - t0,
    )


def step_convergence(cfg: ExperimentConfig, n_symbols: int = 4096) -> list[dict]:
    """SSFM self-convergence on the first span at the configured launch power.

    Propagates one noiseless transmit frame with steps ``2h``, ``h`` and
    ``h/2`` and compares each with a ``h/8`` reference.
    """
    pt = copy.deepcopy(cfg)
    pt.n_symbols = n_symbols
    pt.n_blocks = None
    trellis = pt.dm.trellis()
    chain = DmChainConfig(pt.dm.n, pt.dm.nu, trellis)
    n_blocks = _aligned_blocks(pt, chain.n_symbols)
    grid = pt.grid
    p_band = dbm_to_mw(_band_power_dbm(pt))
    waves, offsets = [], []
    for b, (_, _, off) in enumerate(grid.offsets_ghz()):
        stream = generate_band(pt, chain, SelectorKind("none"), n_blocks, np.random.SeedSequence([pt.seed, 0, b]))
        wave = rrc_shape(stream.symbols, grid.rolloff, grid.samples_per_symbol, grid.per_subcarrier_baud)
        waves.append(normalize_power(wave, p_band))
        offsets.append(off)
    tx = frequency_mux(waves, offsets)
    fiber = pt.link.fiber
    h = pt.link.step_km
    ref = ssfm_propagate(tx, fiber, h / 8)
    out = []
    for step in (2 * h, h, h / 2):
        y = ssfm_propagate(tx, fiber, step)
        mse = float(np.mean(np.abs(y.pol1 - ref.pol1) ** 2 + np.abs(y.pol2 - ref.pol2) ** 2))
        out.append({"step_km": step, "mse_mW": mse, "relative": mse / mean_power(ref)})
    return out


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """All rows of ``cfg``, in sweep order then repetition order.

    Points are independent and seeded from ``cfg.seed`` only, so the rows
    do not depend on ``threads``.
    """
    cfg.validate()
    tasks = [(i, v, r) for i, v in enumerate(cfg.sweep.values) for r in range(cfg.repetitions)]
    if threads <= 1 or len(tasks) == 1:
        return [run_point(cfg, v, i, r) for i, v, r in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_point, cfg, v, i, r) for i, v, r in tasks]
        return [f.result() for f in futures]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x} in results")
        return f"{float(x):.9g}"
    return str(x)


def result_columns(include_timing: bool = False) -> list[str]:
    cols = [f.name for f in dataclasses.fields(ResultRow)]
    return cols if include_timing else [c for c in cols if c not in TIMING_COLUMNS]


def emit_csv(rows: Sequence[ResultRow], path: str | Path, config: ExperimentConfig | None = None,
             include_timing: bool = False) -> Path:
    """Write ``rows`` as CSV.

    With ``config`` the first line is a ``# config:`` comment holding the
    resolved configuration. Timing columns are left out by default so that
    reruns produce identical bytes.
    """
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    cols = result_columns(include_timing)
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write("# config: " + json.dumps(config.resolved(), sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for r in rows:
            writer.writerow([_fmt(getattr(r, c)) for c in cols])
    return path


def read_csv(path: str | Path) -> list[dict]:
    """Parse a file written by :func:`emit_csv`, skipping comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
