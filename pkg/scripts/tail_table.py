"""Exact, saddlepoint and normal tail probabilities for the gamma mean
at selected exact upper-tail levels (shape = rate = 0.01, n = 750)."""

import argparse
from dataclasses import dataclass

import numpy as np
from scipy import stats

from pvaldist.cumulants import FamilySpec
from pvaldist.saddlepoint import normal_pvalue, tail_prob


@dataclass
class TableConfig:
    shape: float = 0.01
    rate: float = 0.01
    n: int = 750
    levels: tuple = (1.04e-5, 1.46e-5, 2.12e-5, 3.31e-5, 3.80e-5)


def table(cfg: TableConfig):
    fam = FamilySpec.gamma(cfg.shape, cfg.rate)
    dist = stats.gamma(cfg.n * cfg.shape, scale=1 / (cfg.n * cfg.rate))
    rows = []
    for p in cfg.levels:
        x = dist.isf(p)
        rows.append((x, dist.sf(x), tail_prob(fam, cfg.n, x, upper=True),
                     tail_prob(fam, cfg.n, x, form="rstar_form", upper=True), normal_pvalue(fam, cfg.n, x)))
    return np.array(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=750)
    ap.add_argument("--levels", type=float, nargs="*")
    a = ap.parse_args()
    cfg = TableConfig(n=a.n)
    if a.levels:
        cfg.levels = tuple(a.levels)
    print(f"{'mean':>10s} {'exact':>10s} {'LR':>10s} {'r*-form':>10s} {'normal 2s':>10s}")
    for r in table(cfg):
        print(" ".join(f"{v:10.4g}" for v in r))
