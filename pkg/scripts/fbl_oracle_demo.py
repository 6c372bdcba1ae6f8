"""Compare the saddlepoint, normal and importance-sampled RCUs values.

Sweeps the payload at a fixed scalar channel and prints one row per rate,
with the optimized s, the two approximations and the MC estimate with its
relative standard error.
"""
import argparse

import numpy as np

from cellfree_urllc.fbl import ScalarChannelPoint, epsilon_normal, epsilon_rcus_mc, optimize_s


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=complex, default=1.0)
    ap.add_argument("--ghat", type=complex, default=0.95)
    ap.add_argument("--sigma2", type=float, default=0.3)
    ap.add_argument("--rho", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=130)
    ap.add_argument("--bits", default="80,120,160,200")
    ap.add_argument("--mc-samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'bits':>6} {'s*':>9} {'saddlepoint':>12} {'normal':>12} {'MC-IS':>12} {'rel.se':>8}")
    for b in (int(x) for x in args.bits.split(",")):
        p = ScalarChannelPoint.from_payload(args.g, args.ghat, args.sigma2, args.rho, args.n, b)
        s, sp = optimize_s(p)
        tilt = float(np.clip(sp.zeta_used, 0.0, 1.0))
        mc = epsilon_rcus_mc(p, s, args.mc_samples, tilt, rng)
        nm = epsilon_normal(p, s)
        print(f"{b:6d} {s:9.4f} {sp.value:12.4e} {nm.value:12.4e} {mc.value:12.4e} {mc.stderr / mc.value:8.3f}")


if __name__ == "__main__":
    main()
