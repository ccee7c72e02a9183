"""Maximal deviation of the corrected p-value CDF from uniform as n grows,
for one- and two-sided tests of the gamma mean."""

import argparse
from dataclasses import dataclass

import numpy as np

from pvaldist.cumulants import FamilySpec, calibrate
from pvaldist.edgeworth import pvalue_cdf


@dataclass
class RateConfig:
    shape: float = 0.01
    rate: float = 0.01
    ns: tuple = (250, 500, 750, 1500, 3000, 6000)
    points: int = 19991


def deviations(cfg: RateConfig):
    fam = FamilySpec.gamma(cfg.shape, cfg.rate)
    t = np.linspace(0.0005, 0.9995, cfg.points)
    mean, sd = cfg.shape / cfg.rate, np.sqrt(cfg.shape) / cfg.rate
    out = []
    for n in cfg.ns:
        cal = calibrate(fam, n, mean, sd)
        out.append((n, *(np.max(np.abs(pvalue_cdf(cal, t, s) - t)) for s in ("one_sided", "two_sided"))))
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--ns", type=int, nargs="*")
    a = ap.parse_args()
    cfg = RateConfig(ns=tuple(a.ns)) if a.ns else RateConfig()
    prev = None
    print(f"{'n':>6s} {'one-sided':>11s} {'two-sided':>11s} {'ratio1':>7s} {'ratio2':>7s}")
    for n, d1, d2 in deviations(cfg):
        r = f"{d1 / prev[1]:7.3f} {d2 / prev[2]:7.3f}" if prev else ""
        print(f"{n:6d} {d1:11.3e} {d2:11.3e} {r}")
        prev = (n, d1, d2)
