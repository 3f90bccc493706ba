"""Run one or more shipped presets and write a CSV per preset.

    python3 scripts/run_preset.py fig6_mD fig7_multispan --threads 1 --outdir results
"""
import argparse
import logging
import pathlib
import time

from dss import emit_csv, load_preset, run_experiment
from dss.config import preset_names


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("presets", nargs="*", help="preset names (default: all)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--symbols", type=int, default=None, help="override n_symbols for a quick pass")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in args.presets or preset_names():
        cfg = load_preset(name)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.symbols is not None:
            cfg.n_symbols = args.symbols
        t0 = time.perf_counter()
        rows = run_experiment(cfg.validate(), threads=args.threads)
        path = emit_csv(rows, outdir / f"{name}.csv", config=cfg, include_timing=True)
        logging.info("%s: %d rows, %.0f s -> %s", name, len(rows), time.perf_counter() - t0, path)


if __name__ == "__main__":
    main()
