#!/usr/bin/env python3
"""Sliding-mode integration of the limiting differential inclusion.

Three runs: the benchmark field whose trajectory is captured by y=0 and
slides with velocity [1,0]; the relay whose trajectory parks at the origin;
and a field whose switching line stops attracting at x=5/3 so the slide
ends in a tangential exit.
"""

import os

import numpy as np

import driftlab as dl
from driftlab.fields import AffinePiece, ConstantPiece, CoordinateGuard, PiecewiseField
from driftlab.io import write_trajectory_csv

OUT = os.path.join(os.path.dirname(__file__), "out")


def describe(name, traj):
    modes = []
    for lab in traj.mode_labels:
        if not modes or modes[-1][0] != lab:
            modes.append([lab, 1])
        else:
            modes[-1][1] += 1
    chain = " -> ".join(f"{lab}({n})" for lab, n in modes)
    print(f"  {name}: final {np.round(traj.points[-1], 6).tolist()}")
    print(f"    segment modes: {chain}")


def main():
    os.makedirs(OUT, exist_ok=True)

    fld = dl.builtin_field("example1")
    traj = dl.integrate_filippov(fld, [0.0, 1.0], 3.0, 1e-3)
    describe("example1 from (0,1)", traj)
    slide_start = next(i for i, lab in enumerate(traj.mode_labels) if lab == "slide:0")
    print(f"    capture at t={traj.times[slide_start]:.4f}, "
          f"x={traj.points[slide_start][0]:.4f}; slides with v=[1,0]")
    write_trajectory_csv(os.path.join(OUT, "example1_trajectory.csv"), traj)

    relay = dl.builtin_field("relay")
    rtraj = dl.integrate_filippov(relay, [0.5], 2.0, 1e-3)
    describe("relay from 0.5", rtraj)
    write_trajectory_csv(os.path.join(OUT, "relay_trajectory.csv"), rtraj)

    # attracting only while x < 5/3: the slide exits tangentially
    exit_field = PiecewiseField(
        2,
        [CoordinateGuard(1, 2)],
        {"+": AffinePiece([[0.0, 0.0], [0.6, 0.0]], [1.0, -1.0]),
         "-": ConstantPiece([1.0, 1.0])},
        name="sliding_exit",
    )
    etraj = dl.integrate_filippov(exit_field, [0.0, 0.5], 3.0, 1e-3)
    describe("sliding exit field from (0, 0.5)", etraj)
    slides = [i for i, lab in enumerate(etraj.mode_labels) if lab.startswith("slide")]
    print(f"    slide spans x in [{etraj.points[slides[0]][0]:.4f}, "
          f"{etraj.points[slides[-1] + 1][0]:.4f}] (tangency at 5/3 = {5/3:.4f})")

    print("\na-posteriori inclusion check (hull distance of segment slopes):")
    for name, f, t in (("example1", fld, traj), ("relay", relay, rtraj), ("exit", exit_field, etraj)):
        print(f"  {name}: max residual {dl.max_slope_residual(f, t):.2e}")

    print(f"\ntrajectory CSVs in {OUT}")


if __name__ == "__main__":
    main()
