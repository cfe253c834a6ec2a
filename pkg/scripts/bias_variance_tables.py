#!/usr/bin/env python3
"""Tabulate closed-form bias and variance for both inclusion policies.

Writes two CSVs: a model-1 sweep over the daily activity probability
(bias plus the noise/weekend variance coefficients, with the enumeration
oracle alongside for verification) and the model-2 constants table.

Usage:
  python3 scripts/bias_variance_tables.py --out-dir results/
"""

import argparse
import csv
from pathlib import Path

from openbounded import (
    OPEN,
    ExperimentCalendar,
    WEEKEND_SHARE,
    bounded,
    enumeration_oracle,
    model1_bias,
    model1_variance_coeffs,
    model2_bias,
    model2_variance_coeffs,
)

POLICIES = (OPEN, bounded(7))


def write_model1_table(path: Path, calendar: ExperimentCalendar, grid) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "p", "bias_per_tau_prime", "eta", "zeta", "oracle_bias"])
        for policy in POLICIES:
            for p in grid:
                bias = model1_bias(policy, p, calendar=calendar)
                eta, zeta = model1_variance_coeffs(policy, p, calendar=calendar)
                oracle = enumeration_oracle(calendar, policy, p).ratio - WEEKEND_SHARE
                writer.writerow([policy.label, p, bias, eta, zeta, oracle])


def write_model2_table(path: Path, lengths) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "k", "bias_per_tau_prime", "eta_per_ns", "zeta_per_ns"])
        for k in lengths:
            calendar = ExperimentCalendar(k)
            for policy in POLICIES:
                bias = model2_bias(policy, calendar)
                eta, zeta = model2_variance_coeffs(policy, calendar)
                writer.writerow([policy.label, k, bias, eta, zeta])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument("--grid-step", type=float, default=0.05)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    grid = [round(args.grid_step * i, 4) for i in range(1, int(1 / args.grid_step))]
    m1_path = args.out_dir / "model1_bias_variance.csv"
    write_model1_table(m1_path, ExperimentCalendar(14), grid)
    print(f"wrote {m1_path} ({len(grid)} grid points per policy)")

    m2_path = args.out_dir / "model2_constants.csv"
    write_model2_table(m2_path, lengths=(14, 21, 28, 56))
    print(f"wrote {m2_path}")

    bias14 = model2_bias(OPEN, ExperimentCalendar(14))
    bias28 = model2_bias(OPEN, ExperimentCalendar(28))
    print(f"model2 open bias coefficient: k=14 -> {bias14:.4f}, k=28 -> {bias28:.4f}")


if __name__ == "__main__":
    main()
