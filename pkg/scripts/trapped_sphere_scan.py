#!/usr/bin/env python3
"""Scan coordinate-sphere radii in an expanding model and print the
classification of the mean curvature vector against the closed-form
trapping threshold 1/(a H) (= 1 here)."""

import argparse

import numpy as np

from spacelike.immersion import ImmersedSubmanifold
from spacelike.mesh import Axis, ParamMesh
from spacelike.spacetime import orthogonal_splitted


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=48)
    ap.add_argument("--radii", type=float, nargs="+",
                    default=[0.3, 0.6, 0.9, 0.99, 1.01, 1.2, 1.6, 2.5])
    args = ap.parse_args()

    model = orthogonal_splitted(
        ("x", "y", "z"),
        [["exp(2*t)", "0", "0"], ["0", "exp(2*t)", "0"], ["0", "0", "exp(2*t)"]],
        "1",
    )
    mesh = ParamMesh(
        (Axis(args.nodes, np.pi - 0.4, periodic=False, start=0.2),
         Axis(args.nodes, 2 * np.pi)),
        names=("th", "ph"),
    )
    print(f"{'radius':>8}  {'tag':<24} {'g(H,H) range':>28}")
    for r in args.radii:
        imm = ImmersedSubmanifold.from_exprs(
            mesh, model,
            ("0", f"{r}*sin(th)*cos(ph)", f"{r}*sin(th)*sin(ph)", f"{r}*cos(th)"),
        )
        rep = imm.mean_curvature_report()
        q = rep.norm_squared
        print(f"{r:8.3f}  {rep.global_tag:<24} [{q.min():+10.4f}, {q.max():+10.4f}]")
    print("\nclosed-form threshold: radius = 1 (inner null expansion changes sign)")


if __name__ == "__main__":
    main()
