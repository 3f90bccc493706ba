"""Command-line entry point.

    dss run <config> [--seed S] [--threads T] [--out results.csv]
    dss sweep <config> --var power_dBm --values 6,8,10 [--seed S] [--threads T] [--out ...]
    dss presets
    dss show <config>
    dss convergence <config>

``<config>`` is a JSON file or the name of a shipped preset.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .config import SWEEP_VARS, load_config, preset_names
from .experiment import emit_csv, run_experiment, step_convergence

log = logging.getLogger("dss")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("DSS_THREADS", "1")))
    except ValueError:
        return 1


def _parse_values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        v = float(tok)
        out.append(int(v) if v.is_integer() and "." not in tok else v)
    if not out:
        raise ValueError("--values is empty")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dss", description="Sequence-selection shaping experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("config", help="JSON config file or preset name")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=_default_threads())
        sp.add_argument("--out", default=None, help="CSV path (default: <name>.csv)")
        sp.add_argument("--timing", action="store_true", help="add a wall_time_s column")

    common(sub.add_parser("run", help="run the sweep stored in the config"))
    sw = sub.add_parser("sweep", help="run the config over a different sweep")
    common(sw)
    sw.add_argument("--var", required=True, choices=SWEEP_VARS)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sub.add_parser("presets", help="list shipped presets")
    show = sub.add_parser("show", help="print the resolved config")
    show.add_argument("config")
    conv = sub.add_parser("convergence", help="SSFM step-size check on the first span")
    conv.add_argument("config")
    conv.add_argument("--symbols", type=int, default=4096)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.cmd == "presets":
            print("\n".join(preset_names()))
            return 0
        cfg = load_config(args.config)
        if args.cmd == "show":
            print(json.dumps(cfg.validate().resolved(), indent=2, sort_keys=True))
            return 0
        if args.cmd == "convergence":
            cfg.validate()
            rows = step_convergence(cfg, args.symbols)
            for r in rows:
                print(f"step {r['step_km']:.4g} km  relative MSE {r['relative']:.3e}")
            for a, b in zip(rows, rows[1:]):
                print(f"ratio {a['step_km']:.4g}->{b['step_km']:.4g} km: {a['mse_mW'] / b['mse_mW']:.2f}")
            return 0
        if args.seed is not None:
            cfg.seed = args.seed
        if args.cmd == "sweep":
            cfg.sweep.var = args.var
            cfg.sweep.values = _parse_values(args.values)
        cfg.validate()
        t0 = time.perf_counter()
        rows = run_experiment(cfg, threads=args.threads)
        out = args.out or f"{cfg.name}.csv"
        emit_csv(rows, out, config=cfg, include_timing=args.timing)
        log.info("%d rows in %.1f s -> %s", len(rows), time.perf_counter() - t0, out)
        print(out)
        return 0
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"dss: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
