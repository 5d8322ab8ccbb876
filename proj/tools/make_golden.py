#!/usr/bin/env python3
"""Regenerates corpus/*.golden.json from brute-force enumeration, independent of the C++ library."""

import argparse
import cmath
import itertools
import json
import math
import pathlib

import numpy as np


def parse_frm(path):
    head, forms, cur = {}, [], None
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] in ("n1", "n2", "d1", "d2", "R"):
            head[tok[0]] = int(tok[1])
        elif tok[0] == "form":
            cur = int(tok[1]) - 1
            while len(forms) <= cur:
                forms.append([])
        else:
            lhs, coeff = line.split("=")
            xs, ys = lhs.split("|")
            forms[cur].append(([int(v) - 1 for v in xs.split()], [int(v) - 1 for v in ys.split()], int(coeff)))
    return head, forms


def grid(ranges):
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ranges]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def eval_forms(head, forms, pts, mod=None):
    n1 = head["n1"]
    out = []
    for f in forms:
        acc = np.zeros(len(pts), dtype=object if mod is None else np.int64)
        for xs, ys, c in f:
            term = np.full(len(pts), c, dtype=np.int64)
            for j in xs:
                term = term * pts[:, j]
                if mod:
                    term %= mod
            for k in ys:
                term = term * pts[:, n1 + k]
                if mod:
                    term %= mod
            acc = acc + term
            if mod:
                acc %= mod
        out.append(acc)
    return out


def count_box(head, forms, P1, P2):
    n1, n2 = head["n1"], head["n2"]
    pts = grid([(-P1, P1)] * n1 + [(-P2, P2)] * n2)
    vals = eval_forms(head, forms, pts)
    ok = np.ones(len(pts), dtype=bool)
    for v in vals:
        ok &= np.asarray(v == 0, dtype=bool)
    return int(ok.sum())


def count_mod(head, forms, q):
    n = head["n1"] + head["n2"]
    pts = grid([(0, q - 1)] * n)
    vals = eval_forms(head, forms, pts, mod=q)
    ok = np.ones(len(pts), dtype=bool)
    for v in vals:
        ok &= v == 0
    return int(ok.sum())


def complete_sum(head, forms, a, q):
    n = head["n1"] + head["n2"]
    pts = grid([(0, q - 1)] * n)
    vals = eval_forms(head, forms, pts, mod=q)
    phase = sum(ai * v for ai, v in zip(a, vals)) % q
    hist = np.bincount(phase, minlength=q)
    s = sum(int(hist[r]) * cmath.exp(2j * math.pi * r / q) for r in range(q)) / q**n
    return [s.real, s.imag]


def golden(path):
    head, forms = parse_frm(path)
    n = head["n1"] + head["n2"]
    max_points = 600_000
    counts = {}
    P = 1
    while (2 * P + 1) ** n <= max_points:
        counts[str(P)] = count_box(head, forms, P, P)
        P += 1
    lopsided = {}
    if 9 ** head["n1"] * 5 ** head["n2"] <= max_points:
        lopsided["4,2"] = count_box(head, forms, 4, 2)
    padic = {}
    for p in (2, 3, 5):
        for k in (1, 2, 3):
            if (p**k) ** n <= max_points:
                padic[f"{p}^{k}"] = count_mod(head, forms, p**k)
    csums = {}
    for q in (2, 3, 4, 5):
        if q**n <= max_points:
            for a in itertools.product(range(q), repeat=head["R"]):
                if math.gcd(q, *a) == 1:
                    csums[f"{','.join(map(str, a))}/{q}"] = complete_sum(head, forms, a, q)
    return {"system": path.name, "symmetric_counts": counts, "lopsided_counts": lopsided,
            "residue_counts": padic, "complete_sums": csums}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", default=pathlib.Path(__file__).resolve().parent.parent / "corpus", type=pathlib.Path)
    args = ap.parse_args()
    for frm in sorted(args.corpus.glob("*.frm")):
        out = frm.with_suffix(".golden.json")
        out.write_text(json.dumps(golden(frm), indent=2, sort_keys=True) + "\n")
        print("wrote", out)


if __name__ == "__main__":
    main()
