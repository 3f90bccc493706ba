"""Print the main columns of one or more result CSVs as an aligned table."""
import argparse

from dss import read_csv

COLUMNS = ["name", "sweep_var", "sweep_value", "selector", "n", "nu", "snr_elec_dB", "snr_err_dB",
           "gmi_bits_per_4D", "air_bits_per_4D", "winner_d_edi"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", nargs="+")
    ap.add_argument("--columns", default=",".join(COLUMNS))
    args = ap.parse_args()
    cols = args.columns.split(",")
    rows = [[str(r.get(c, "")) for c in cols] for path in args.csv for r in read_csv(path)]
    widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(cols)] if rows else [len(c) for c in cols]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    for r in rows:
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)))


if __name__ == "__main__":
    main()
