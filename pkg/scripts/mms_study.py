#!/usr/bin/env python3
"""Manufactured-solution convergence tables for transport, Maxwell and exchange."""

import argparse

from spindd.errors import AccuracyError
from spindd.studies import MMSKind, run_mms_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--kinds", nargs="+", default=[k.value for k in MMSKind],
                    choices=[k.value for k in MMSKind])
    ap.add_argument("--min-order", type=float, default=1.9)
    args = ap.parse_args()
    status = 0
    for kind in args.kinds:
        try:
            print(run_mms_study(kind, tuple(args.ladder), args.min_order))
        except AccuracyError as exc:
            print(exc)
            status = 1
    return status


if __name__ == "__main__":
    raise SystemExit(main())
