#!/usr/bin/env python3
"""Benchmark transform recovery: apply random similarity transforms to a
smooth synthetic image, register back, and report accuracy and timing.

Handy for tuning SearchConfig knobs (children per iteration, decay,
pyramid depth) against wall-clock cost.
"""

import argparse
import math
import time

import numpy as np

from paintdiff import registration as reg
from make_synthetic_pair import smooth_blobs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, default=20)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--max-theta-deg", type=float, default=15.0)
    ap.add_argument("--max-shift", type=float, default=12.0)
    ap.add_argument("--children", type=int, default=8)
    ap.add_argument("--decay", type=float, default=0.5)
    ap.add_argument("--pyramid-levels", type=int, default=3)
    ap.add_argument("--no-pyramid", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    reference = smooth_blobs(args.size, args.size, n_blobs=14, rng=np.random.default_rng(7))

    hits = 0
    t_total = 0.0
    for case in range(args.cases):
        truth = reg.SimilarityTransform(
            theta=math.radians(rng.uniform(-args.max_theta_deg, args.max_theta_deg)),
            scale=rng.uniform(0.85, 1.18),
            tx=rng.uniform(-args.max_shift, args.max_shift),
            ty=rng.uniform(-args.max_shift, args.max_shift),
            reflect=bool(rng.integers(0, 2)),
        )
        moving = reg.apply_transform(reference, reg.invert(truth), args.size, args.size)
        cfg = reg.SearchConfig(
            rng_seed=case,
            children_per_iter=args.children,
            decay=args.decay,
            pyramid_levels=args.pyramid_levels,
            use_pyramid=not args.no_pyramid,
        )
        t0 = time.time()
        result = reg.best_first_register(moving, reference, cfg)
        dt_wall = time.time() - t0
        t_total += dt_wall

        got = result.transform
        dtheta = abs(math.degrees(reg.normalize_angle(got.theta - truth.theta)))
        dscale = abs(got.scale - truth.scale)
        dshift = math.hypot(got.tx - truth.tx, got.ty - truth.ty)
        ok = dtheta <= 0.5 and dscale <= 0.02 and dshift <= 1.5 and got.reflect == truth.reflect
        hits += ok
        print(
            f"case {case:2d}: dtheta={dtheta:7.4f}deg dscale={dscale:8.5f} "
            f"dshift={dshift:7.4f}px reflect={'ok' if got.reflect == truth.reflect else 'WRONG'} "
            f"iters={result.iterations:3d} {dt_wall:5.2f}s {'PASS' if ok else 'MISS'}"
        )

    print(f"\n{hits}/{args.cases} recovered within tolerance, {t_total:.1f}s total "
          f"({t_total / args.cases:.2f}s per case)")


if __name__ == "__main__":
    main()
