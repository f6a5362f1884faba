#!/usr/bin/env python3
"""Regenerate the bundled grid case fixtures and reference solutions.

Case data comes from PYPOWER (pip install PYPOWER), which ships the standard
IEEE 14-, 118-, and 300-bus test systems in MATPOWER format. We convert each
case to the JSON schema consumed by fdia-core, solve it once with PYPOWER's
Newton power flow at tight tolerance, and store the solved state as a
reference fixture. The converted JSON is cross-checked against the solved
state by rebuilding the admittance matrix here (independently of fdia-core)
and verifying complex power mismatch at every bus.

Also writes profiles/synthetic.csv, the bundled fallback load profile:
a daily/weekly sinusoid plus seeded Gaussian noise, 9600 points.

Usage: python3 tools/make_fixtures.py
"""

import json
import math
import os

import numpy as np
from pypower.api import case14, case118, case300, ppoption, runpf

HERE = os.path.dirname(os.path.abspath(__file__))
CASES_DIR = os.path.join(HERE, "..", "crates", "core", "cases")
PROFILES_DIR = os.path.join(HERE, "..", "crates", "core", "profiles")

# MATPOWER column indices.
BUS_I, BUS_TYPE, PD, QD, GS, BS = 0, 1, 2, 3, 4, 5
VM, VA = 7, 8
GEN_BUS, PG, QG, VG, GEN_STATUS = 0, 1, 2, 5, 7
F_BUS, T_BUS, BR_R, BR_X, BR_B, TAP, SHIFT, BR_STATUS = 0, 1, 2, 3, 4, 8, 9, 10


def convert(name, ppc):
    base = float(ppc["baseMVA"])
    bus = ppc["bus"]
    gen = ppc["gen"]
    branch = ppc["branch"]

    on = gen[gen[:, GEN_STATUS] > 0]
    gens_at = {}
    for row in on:
        gens_at.setdefault(int(row[GEN_BUS]), []).append(row)

    buses = []
    for row in bus:
        bid = int(row[BUS_I])
        btype = int(row[BUS_TYPE])
        grows = gens_at.get(bid, [])
        if btype == 3:
            kind = "slack"
        elif btype == 2 and grows:
            kind = "pv"
        else:
            kind = "pq"
        p_gen = float(sum(g[PG] for g in grows))
        q_gen = float(sum(g[QG] for g in grows))
        v_set = float(grows[0][VG]) if grows else 1.0
        buses.append(
            {
                "id": bid,
                "kind": kind,
                "p_load": float(row[PD]),
                "q_load": float(row[QD]),
                "p_gen": p_gen,
                "q_gen": q_gen,
                "v_set": v_set,
                "gs": float(row[GS]) / base,
                "bs": float(row[BS]) / base,
            }
        )

    branches = []
    for row in branch:
        if row[BR_STATUS] <= 0:
            continue
        assert row[BR_X] != 0.0, "zero-impedance branch in source data"
        tap = float(row[TAP]) if row[TAP] != 0.0 else 1.0
        branches.append(
            {
                "from": int(row[F_BUS]),
                "to": int(row[T_BUS]),
                "r": float(row[BR_R]),
                "x": float(row[BR_X]),
                "b": float(row[BR_B]),
                "tap": tap,
                "shift": math.radians(float(row[SHIFT])),
            }
        )

    return {"base_mva": base, "buses": buses, "branches": branches}


def solve(ppc):
    opt = ppoption(PF_TOL=1e-10, PF_MAX_IT=30, VERBOSE=0, OUT_ALL=0)
    res, ok = runpf(ppc, opt)
    assert ok == 1, "reference power flow did not converge"
    return res


def reference(name, res):
    sol_gen = {}
    for row in res["gen"]:
        if row[GEN_STATUS] > 0:
            bid = int(row[GEN_BUS])
            pg, qg = sol_gen.get(bid, (0.0, 0.0))
            sol_gen[bid] = (pg + float(row[PG]), qg + float(row[QG]))
    # Angles are defined only up to a reference; re-reference so the slack
    # bus sits at zero (some source cases pin it elsewhere, e.g. 30 degrees).
    slack_va = next(
        float(row[VA]) for row in res["bus"] if int(row[BUS_TYPE]) == 3
    )
    return {
        "case": name,
        "source": "PYPOWER runpf, Newton method, tol 1e-10, slack angle zeroed",
        "buses": [
            {
                "id": int(row[BUS_I]),
                "vm": float(row[VM]),
                "va": math.radians(float(row[VA]) - slack_va),
            }
            for row in res["bus"]
        ],
        "gen": [
            {"id": bid, "p_gen": pg, "q_gen": qg} for bid, (pg, qg) in sorted(sol_gen.items())
        ],
    }


def crosscheck(case, ref):
    """Rebuild Ybus from the converted JSON and verify S(V) against the
    solved generator outputs. Catches unit or convention mistakes in the
    conversion without relying on any fdia-core code."""
    ids = [b["id"] for b in case["buses"]]
    idx = {bid: i for i, bid in enumerate(ids)}
    n = len(ids)
    base = case["base_mva"]

    Y = np.zeros((n, n), dtype=complex)
    for br in case["branches"]:
        f, t = idx[br["from"]], idx[br["to"]]
        y = 1.0 / complex(br["r"], br["x"])
        ysh = 0.5j * br["b"]
        tap = br["tap"] * np.exp(1j * br["shift"])
        Y[f, f] += (y + ysh) / (tap * np.conj(tap))
        Y[t, t] += y + ysh
        Y[f, t] += -y / np.conj(tap)
        Y[t, f] += -y / tap
    for b in case["buses"]:
        i = idx[b["id"]]
        Y[i, i] += complex(b["gs"], b["bs"])

    V = np.zeros(n, dtype=complex)
    for rb in ref["buses"]:
        V[idx[rb["id"]]] = rb["vm"] * np.exp(1j * rb["va"])

    sol_gen = {g["id"]: (g["p_gen"], g["q_gen"]) for g in ref["gen"]}
    S_spec = np.zeros(n, dtype=complex)
    for b in case["buses"]:
        pg, qg = sol_gen.get(b["id"], (0.0, 0.0))
        S_spec[idx[b["id"]]] = complex(pg - b["p_load"], qg - b["q_load"]) / base

    S_calc = V * np.conj(Y @ V)
    return float(np.max(np.abs(S_calc - S_spec)))


def write_profile():
    rng = np.random.default_rng(9600)
    t = np.arange(9600)
    series = (
        1.0
        + 0.18 * np.sin(2 * np.pi * t / 96.0 - 0.6)
        + 0.06 * np.sin(2 * np.pi * t / (96.0 * 7.0))
        + 0.02 * rng.standard_normal(9600)
    )
    path = os.path.join(PROFILES_DIR, "synthetic.csv")
    with open(path, "w") as f:
        f.write("load\n")
        for v in series:
            f.write("%.17g\n" % v)
    print("wrote %s (%d points)" % (path, len(series)))


def main():
    os.makedirs(CASES_DIR, exist_ok=True)
    os.makedirs(PROFILES_DIR, exist_ok=True)
    for name, fn in [("ieee14", case14), ("ieee118", case118), ("ieee300", case300)]:
        ppc = fn()
        case = convert(name, ppc)
        res = solve(ppc)
        ref = reference(name, res)
        mismatch = crosscheck(case, ref)
        assert mismatch < 1e-7, "conversion mismatch %g for %s" % (mismatch, name)
        with open(os.path.join(CASES_DIR, name + ".json"), "w") as f:
            json.dump(case, f, indent=1)
            f.write("\n")
        with open(os.path.join(CASES_DIR, "refsol_" + name + ".json"), "w") as f:
            json.dump(ref, f, indent=1)
            f.write("\n")
        taps = sum(1 for br in case["branches"] if br["tap"] != 1.0)
        shifts = sum(1 for br in case["branches"] if br["shift"] != 0.0)
        print(
            "%s: %d buses, %d branches (%d taps, %d shifts), load %.1f MW, mismatch %.2e"
            % (
                name,
                len(case["buses"]),
                len(case["branches"]),
                taps,
                shifts,
                sum(b["p_load"] for b in case["buses"]),
                mismatch,
            )
        )
    write_profile()


if __name__ == "__main__":
    main()
