#!/usr/bin/env python3
"""Grid-refinement study of every tracked residual, with fitted slopes.

Second-order quantities (exact-solution residuals) should fit slope ~2;
conservation-law and frame residuals are asserted at >= 0.9 in the
acceptance suite.
"""

from dataclasses import replace

from conslab.experiments import (ExperimentConfig, convergence_quantities,
                                 fit_slope, pairwise_slopes)

ns = (33, 65, 129)
base = ExperimentConfig(ns=ns, lam=0.3, H=2.0)

for payload, domain in (("harmonic", "disk_mask"), ("shatah", "disk_mask"),
                        ("cmc", "disk_mask"), ("conslaw", "square"),
                        ("frames", "disk_mask")):
    cfg = replace(base, payload=payload, domain=domain,
                  lam=0.5 if payload in ("harmonic", "cmc") else 0.3)
    series = {}
    for n in ns:
        for q, v in convergence_quantities(cfg, n).items():
            series.setdefault(q, []).append(v)
    print(f"{payload} ({domain}):")
    for q, vals in sorted(series.items()):
        s = fit_slope(ns, vals)
        pw = ", ".join(f"{x:.2f}" for x in pairwise_slopes(ns, vals))
        print(f"  {q:12s}: " + "  ".join(f"{v:.3e}" for v in vals)
              + f"   slope {s:.2f} (pairwise {pw})")
