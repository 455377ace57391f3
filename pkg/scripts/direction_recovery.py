"""Heading recovery on random bump crossings.

Reports how many of N scenarios put the aggregate flow of the most prominent
'during' segment within a tolerance of the true travel direction.
"""

import argparse
import dataclasses

import numpy as np

from tactileflow.config import PipelineConfig, SegmentationConfig
from tactileflow.interpolation import KernelConfig
from tactileflow.pipeline import run_pipeline
from tactileflow.synth import Scenario, expected_direction, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=20)
    ap.add_argument("--heading-seed", type=int, default=123)
    ap.add_argument("--literal", action="store_true", help="use exp(-d / 2 sigma^2) instead of the squared kernel")
    ap.add_argument("--sigma", type=float, default=4.0)
    ap.add_argument("--guard", action="store_true", help="enable flow.residual_guard")
    ap.add_argument("--tol", type=float, default=20.0, help="degrees")
    args = ap.parse_args()

    cfg = PipelineConfig(
        kernel=KernelConfig(sigma=args.sigma, squared=not args.literal),
        segmentation=SegmentationConfig(labels=("during",)),
    )
    cfg = dataclasses.replace(cfg, flow=dataclasses.replace(cfg.flow, residual_guard=args.guard))
    rng = np.random.default_rng(args.heading_seed)
    errs = []
    for k in range(args.n):
        heading = rng.uniform(0, 2 * np.pi)
        rec, gt = generate(Scenario(heading=heading, sample_rate=25.0), seed=k)
        res = run_pipeline(rec, cfg)
        if not res.results:
            print(f"{k:3d}  heading {np.degrees(heading):6.1f}  no segment")
            errs.append(np.inf)
            continue
        prom = dict(res.peaks)
        r = max(res.results, key=lambda r: prom.get(r.segment.anchor, 0.0))
        want = expected_direction(gt, res.projections["top-xy"], r.segment.start, r.segment.end)
        err = float(np.degrees(np.arccos(np.clip(r.summary.direction @ want, -1, 1))))
        errs.append(err)
        print(f"{k:3d}  heading {np.degrees(heading):6.1f}  error {err:6.1f}  magnitude {r.summary.magnitude:.3f}")
    errs = np.array(errs)
    print(f"{int((errs <= args.tol).sum())}/{args.n} within {args.tol:g} deg, median {np.median(errs):.1f} deg")


if __name__ == "__main__":
    main()
