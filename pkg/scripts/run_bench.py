#!/usr/bin/env python3
"""Synchronisation-count matrix across instrumentation modes and workloads."""
import argparse
import json
import os

from adaptrace.harness import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--modes", default="CA,SMSI,AMSD,RA")
    ap.add_argument("--workloads", default="incdec,incdec-faulty,webserver")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=int(os.environ.get("ADAPTRACE_SEED", 0)))
    ap.add_argument("--clients", type=int, default=5)
    ap.add_argument("--json", metavar="FILE", help="also write one record per run")
    a = ap.parse_args()
    rep = bench(a.modes.split(","), a.workloads.split(","),
                range(a.seed, a.seed + a.seeds), a.clients)
    print(rep.to_text())
    if a.json:
        with open(a.json, "w") as fh:
            for r in rep.records():
                fh.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    main()
