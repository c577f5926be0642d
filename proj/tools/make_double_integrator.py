#!/usr/bin/env python3
"""Condensed linear MPC for the double integrator, written as a problem document.

    x+ = A x + B u,  A = [[1, 1], [0, 1]],  B = [[0.5], [1]]
    min  1/2 sum_{t<N} (x_t' Q x_t + u_t' R u_t) + 1/2 x_N' P x_N
    s.t. |u_t| <= u_max,   theta = x_0 in a box.
"""
import argparse
import json

import numpy as np


def build(horizon, q, r, u_max, box):
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.array([[0.5], [1.0]])
    nx, nu = 2, 1
    # Stacked predictions X = S U + T x0 for x_1..x_N.
    S = np.zeros((nx * horizon, nu * horizon))
    T = np.zeros((nx * horizon, nx))
    Ak = np.eye(nx)
    for t in range(horizon):
        Ak = A @ Ak
        T[t * nx:(t + 1) * nx, :] = Ak
        for s in range(t + 1):
            S[t * nx:(t + 1) * nx, s * nu:(s + 1) * nu] = np.linalg.matrix_power(A, t - s) @ B
    Qbar = np.kron(np.eye(horizon), q * np.eye(nx))
    Rbar = r * np.eye(nu * horizon)
    H = S.T @ Qbar @ S + Rbar
    H = 0.5 * (H + H.T)
    f_lin = S.T @ Qbar @ T
    n = nu * horizon
    C = np.vstack([np.eye(n), -np.eye(n)])
    return {
        "H": H.tolist(),
        "C": C.tolist(),
        "f_lin": f_lin.tolist(),
        "f_const": [0.0] * n,
        "d_lin": np.zeros((2 * n, nx)).tolist(),
        "d_const": [u_max] * (2 * n),
        "theta_set": {
            "A": [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            "b": [box[0], box[0], box[1], box[1]],
        },
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--horizon", type=int, default=4)
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--r", type=float, default=1.0)
    ap.add_argument("--u-max", type=float, default=1.0)
    ap.add_argument("--box", type=float, nargs=2, default=[4.0, 2.0], help="half-widths for position and velocity")
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    doc = build(args.horizon, args.q, args.r, args.u_max, args.box)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out == "-":
        print(text, end="")
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
