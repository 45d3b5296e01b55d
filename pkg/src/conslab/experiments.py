"""Named, reproducible experiments over the library, with CSV artifacts.

Each experiment returns (rows-by-file, summary) where the summary is a list of
(name, passed, detail) bound checks; the CLI turns failed bounds into a
nonzero exit status.  All output is deterministic for a fixed (config, seed).
"""

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import targets
from .calculus import div
from .conslaw import build_AB, conservation_residual, gauge_relation_residual
from .elliptic import vec_hminus1
from .fields import MatField, ScalarField, l2_norm
from .frames import (coulomb_frame, frame_conservation_residual,
                     frame_invariant_defects, second_derivative_report, solve_a)
from .gauge import GaugeOptions, coulomb_gauge
from .grid import make_grid
from .wente import SHARP_GRAD, SHARP_SUP, wente_solve, wente_sweep, _family_pair

EXPERIMENTS = ("wente", "gauge", "conslaw", "frames", "heinz", "convergence")

SLACK = 0.10


@dataclass
class ExperimentConfig:
    experiment: str = "wente"
    ns: tuple = (33,)
    seed: int = 0
    samples: int = 20
    bc: str = "dirichlet"
    domain: str = "disk_mask"
    family: str = "random"
    lam: float = 0.3
    lams: tuple = (0.1, 0.2, 0.3)
    H: float = 2.0
    center: tuple = (0.0, 0.0)
    payload: str = "harmonic"
    out: str = "results"
    jobs: int = 1
    # solver/iteration tolerances forwarded to the gauge and fixed point
    tol_div: float = 1e-8
    energy_threshold: float = 6.0
    force: bool = True
    tol_fp: float = 1e-9
    max_sweeps: int = 80

    def gauge_options(self):
        return GaugeOptions(tol_div=self.tol_div,
                            energy_threshold=self.energy_threshold,
                            force=self.force)

    def ab_options(self):
        from .conslaw import ABOptions
        return ABOptions(tol_fp=self.tol_fp, max_sweeps=self.max_sweeps)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.ns:
            raise ConfigError("ns must list at least one grid size")
        if any(n % 2 == 0 or n < 17 for n in self.ns):
            raise ConfigError("grid sizes must be odd and >= 17")
        if list(self.ns) != sorted(self.ns):
            raise ConfigError("grid sizes must be ascending")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "experiment": str,
    "ns": "int_list",
    "seed": int,
    "samples": int,
    "bc": str,
    "domain": str,
    "family": str,
    "lam": float,
    "lams": "float_list",
    "H": float,
    "center": "float_list",
    "payload": str,
    "out": str,
    "jobs": int,
    "tol_div": float,
    "energy_threshold": float,
    "force": "bool",
    "tol_fp": float,
    "max_sweeps": int,
}


def parse_config(path):
    """Flat key = value file; '#' starts a comment; lists are comma separated."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            kind = _SCHEMA[key]
            try:
                if kind == "int_list":
                    values[key] = tuple(int(x) for x in val.split(","))
                elif kind == "float_list":
                    values[key] = tuple(float(x) for x in val.split(","))
                elif kind == "bool":
                    if val.lower() not in ("true", "false", "0", "1"):
                        raise ValueError(f"expected true/false, got {val!r}")
                    values[key] = val.lower() in ("true", "1")
                elif kind is int:
                    values[key] = int(val)
                elif kind is float:
                    values[key] = float(val)
                else:
                    values[key] = val
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return ExperimentConfig(**values).validate()


# ---------------------------------------------------------------------------
# helpers


def fit_slope(ns, values):
    """Least-squares slope of log(value) against log(h)."""
    hs = np.log([2.0 / (n - 1) for n in ns])
    vals = np.log(values)
    return float(np.polyfit(hs, vals, 1)[0])


def pairwise_slopes(ns, values):
    out = []
    for k in range(len(ns) - 1):
        h0, h1 = 2.0 / (ns[k] - 1), 2.0 / (ns[k + 1] - 1)
        out.append(float(np.log(values[k + 1] / values[k]) / np.log(h1 / h0)))
    return out


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# experiment payloads


def _wente_chunk(args):
    family, n, domain, bc, seed, sample_ids = args
    grid = make_grid(n, domain)
    rows = []
    for s in sample_ids:
        a, b = _family_pair(family, grid, seed, s)
        _, rep = wente_solve(a, b, bc=bc)
        rows.append((s, n, grid.h, rep.bc, rep.norm_grad_a, rep.norm_grad_b,
                     rep.ratio_sup, rep.ratio_grad))
    return rows


def run_wente(cfg):
    header = ["sample_id", "n", "h", "bc", "norm_grad_a", "norm_grad_b",
              "ratio_sup", "ratio_grad"]
    rows = []
    for n in cfg.ns:
        ids = list(range(cfg.samples))
        if cfg.jobs > 1 and cfg.samples > 1:
            chunks = [ids[k::cfg.jobs] for k in range(cfg.jobs)]
            args = [(cfg.family, n, cfg.domain, cfg.bc, cfg.seed, c)
                    for c in chunks if c]
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                for part in pool.map(_wente_chunk, args):
                    rows.extend(part)
        else:
            rows.extend(_wente_chunk((cfg.family, n, cfg.domain, cfg.bc,
                                      cfg.seed, ids)))
    rows.sort(key=lambda r: (r[1], r[0]))
    sup_bound = SHARP_SUP * (1 + SLACK)
    grad_bound = SHARP_GRAD * (1 + SLACK)
    worst_sup = max((r[6] for r in rows), default=0.0)
    worst_grad = max((r[7] for r in rows), default=0.0)
    summary = [
        ("ratio_sup <= (1/2pi)(1+10%)", worst_sup <= sup_bound,
         f"max {worst_sup:.5f} vs {sup_bound:.5f}"),
        ("ratio_grad <= (1/sqrt(2pi))(1+10%)", worst_grad <= grad_bound,
         f"max {worst_grad:.5f} vs {grad_bound:.5f}"),
    ]
    return {"wente.csv": (header, rows)}, summary


def run_gauge(cfg):
    header = ["lam", "n", "h", "energy_in", "energy_out", "iterations",
              "div_norm", "residual", "residual_rel", "ratio_a11",
              "grad_P", "grad_xi", "xi_l2", "sym_defect"]
    rows = []
    n = cfg.ns[-1]
    grid = make_grid(n, cfg.domain)
    ratios = []
    worst_rel = 0.0
    for lam in cfg.lams:
        u = targets.stereo_sphere_map(grid, lam, cfg.center)
        om = targets.omega_sphere(u)
        res = coulomb_gauge(om, cfg.gauge_options())
        rel = res.residual / math.sqrt(res.energy_in) if res.energy_in > 0 else 0.0
        worst_rel = max(worst_rel, rel)
        ratios.append(res.ratios["a11"])
        rows.append((lam, n, grid.h, res.energy_in, res.energy_out,
                     res.iterations, res.div_centered, res.residual, rel,
                     res.ratios["a11"], res.ratios["grad_P"],
                     res.ratios["grad_xi"], res.ratios["xi_l2"],
                     res.sym_defect))
    summary = [
        ("potential residual <= 1e-3 |Omega|", worst_rel <= 1e-3,
         f"max rel {worst_rel:.3e}"),
        ("bound ratio finite across sweep",
         all(np.isfinite(r) for r in ratios) and max(ratios) <= 3 * min(ratios),
         f"ratios {['%.3f' % r for r in ratios]}"),
    ]
    return {"gauge.csv": (header, rows)}, summary


def run_conslaw(cfg):
    header = ["n", "h", "fp_iters", "fp_residual", "rel17", "cons_l2",
              "cons_hm1", "dist_so", "min_singular", "i15", "i16"]
    trace_header = ["n", "sweep", "update_rel"]
    rows, trace_rows = [], []
    hm1s, rel17s = [], []
    for n in cfg.ns:
        grid = make_grid(n, cfg.domain)
        u = targets.stereo_sphere_map(grid, cfg.lam, cfg.center)
        om = targets.omega_sphere(u)
        gr = coulomb_gauge(om, cfg.gauge_options())
        ab = build_AB(om, gr, cfg.ab_options())
        rel17 = gauge_relation_residual(ab.A, ab.B, om) / l2_norm(om)
        cons_l2, cons_hm1 = conservation_residual(u, ab.A, ab.B)
        rel17s.append(rel17)
        hm1s.append(cons_hm1)
        rows.append((n, grid.h, ab.fp_iters, ab.fp_residual, rel17, cons_l2,
                     cons_hm1, ab.dist_so, ab.min_singular,
                     ab.bound_ratios["i15"], ab.bound_ratios["i16"]))
        for k, upd in enumerate(ab.trace):
            trace_rows.append((n, k, upd))
    summary = [("relation residual <= 1e-3 |Omega| at finest grid",
                rel17s[-1] <= 1e-3, f"{rel17s[-1]:.3e}")]
    if len(cfg.ns) >= 3:
        s = fit_slope(cfg.ns, hm1s)
        summary.append(("conservation H^-1 slope >= 0.9", s >= 0.9, f"{s:.2f}"))
        s17 = fit_slope(cfg.ns, rel17s)
        summary.append(("relation residual decreasing", s17 > 0, f"slope {s17:.2f}"))
    return {"conslaw.csv": (header, rows),
            "conslaw_trace.csv": (trace_header, trace_rows)}, summary


def run_frames(cfg):
    header = ["lam", "n", "h", "coulomb_residual", "r1", "r2", "sup_a",
              "bound_sup", "grad_a", "bound_grad", "empirical_C", "grad_e_sq",
              "ortho_defect", "tangency_defect"]
    rows = []
    bounds_ok = True
    slopes_ok = True
    cs = []
    for lam in cfg.lams:
        r1s, r2s = [], []
        for n in cfg.ns:
            grid = make_grid(n, cfg.domain)
            u = targets.stereo_sphere_map(grid, lam, cfg.center)
            fr = coulomb_frame(u)
            a = solve_a(fr)
            r1, r2 = frame_conservation_residual(u, fr, a)
            ortho, tang = frame_invariant_defects(fr, u)
            rep = second_derivative_report(u, fr)
            from .calculus import grad as _grad
            sup_a = float(np.max(np.abs(a.values[grid.in_domain])))
            grad_a = l2_norm(_grad(a))
            g1 = math.sqrt(rep["grad_e_sq"] - _e2_energy(fr))
            g2 = math.sqrt(_e2_energy(fr))
            bound_sup = SHARP_SUP * g1 * g2 * (1 + SLACK)
            bound_grad = SHARP_GRAD * g1 * g2 * (1 + SLACK)
            bounds_ok &= sup_a <= bound_sup and grad_a <= bound_grad
            rows.append((lam, n, grid.h, fr.coulomb_residual, r1, r2, sup_a,
                         bound_sup, grad_a, bound_grad, rep["empirical_C"],
                         rep["grad_e_sq"], ortho, tang))
            r1s.append(r1)
            r2s.append(r2)
            if n == cfg.ns[-1]:
                cs.append(rep["empirical_C"])
        if len(cfg.ns) >= 3:
            slopes_ok &= fit_slope(cfg.ns, r1s) >= 0.9
            slopes_ok &= fit_slope(cfg.ns, r2s) >= 0.9
    summary = [
        ("sup/grad bounds on the frame potential", bool(bounds_ok), ""),
        ("conservation residual slopes >= 0.9", bool(slopes_ok), ""),
        ("empirical second-derivative constant within factor 3",
         max(cs) <= 3 * min(cs), f"{['%.4f' % c for c in cs]}"),
    ]
    return {"frames.csv": (header, rows)}, summary


def _e2_energy(fr):
    from .frames import _grad_energy
    return _grad_energy(fr.e2)


def run_heinz(cfg):
    header = ["n", "h", "residual_l2", "residual_hm1", "antisym_defect",
              "identity_defect"]
    rows = []
    res = []
    worst_ident = 0.0
    worst_anti = 0.0
    for n in cfg.ns:
        grid = make_grid(n, cfg.domain)
        u = targets.cmc_cap_map(grid, cfg.H, cfg.lam, cfg.center)
        om = targets.omega_mean_curvature(u, cfg.H)
        dense = om.dense()
        anti = float(np.max(np.abs(dense + np.swapaxes(dense, 0, 1))))
        from .calculus import connection_apply
        lhs = connection_apply(om, u).comps
        rhs = targets.mean_curvature_rhs(u, cfg.H).comps
        ident = float(np.max(np.abs((lhs - rhs)[:, grid.interior])))
        l2, hm1 = targets.residual_pde(u, om)
        rows.append((n, grid.h, l2, hm1, anti, ident))
        res.append(l2)
        worst_ident = max(worst_ident, ident)
        worst_anti = max(worst_anti, anti)
    summary = [
        ("connection exactly antisymmetric", worst_anti == 0.0, f"{worst_anti:.1e}"),
        ("wedge identity <= 1e-10", worst_ident <= 1e-10, f"{worst_ident:.1e}"),
    ]
    if len(cfg.ns) >= 2:
        slopes = pairwise_slopes(cfg.ns, res)
        ok = all(s >= 0.9 for s in slopes)
        summary.append(("curvature residual slope >= 0.9", ok,
                        f"{['%.2f' % s for s in slopes]}"))
    return {"heinz.csv": (header, rows)}, summary


PAYLOADS = ("harmonic", "shatah", "cmc", "conslaw", "frames")


def convergence_quantities(cfg, n):
    """Tracked residuals of one payload at one grid size."""
    grid = make_grid(n, cfg.domain)
    if cfg.payload == "harmonic":
        u = targets.stereo_sphere_map(grid, cfg.lam, cfg.center)
        om = targets.omega_sphere(u)
        l2, hm1 = targets.residual_pde(u, om)
        return {"residual_l2": l2, "residual_hm1": hm1}
    if cfg.payload == "shatah":
        u = targets.stereo_sphere_map(grid, cfg.lam, cfg.center)
        om = targets.omega_sphere(u)
        fields = []
        for i in range(3):
            for j in range(i + 1, 3):
                d = div(om.entry(i, j))
                fields.append(ScalarField(
                    grid, np.where(grid.interior, d.values, 0.0), check=False))
        return {"shatah_hm1": vec_hminus1(fields)}
    if cfg.payload == "cmc":
        u = targets.cmc_cap_map(grid, cfg.H, cfg.lam, cfg.center)
        om = targets.omega_mean_curvature(u, cfg.H)
        l2, hm1 = targets.residual_pde(u, om)
        return {"residual_l2": l2, "residual_hm1": hm1}
    if cfg.payload == "conslaw":
        u = targets.stereo_sphere_map(grid, cfg.lam, cfg.center)
        om = targets.omega_sphere(u)
        gr = coulomb_gauge(om, cfg.gauge_options())
        ab = build_AB(om, gr, cfg.ab_options())
        _, hm1 = conservation_residual(u, ab.A, ab.B)
        rel = gauge_relation_residual(ab.A, ab.B, om) / l2_norm(om)
        return {"cons_hm1": hm1, "rel17": rel}
    if cfg.payload == "frames":
        u = targets.stereo_sphere_map(grid, cfg.lam, cfg.center)
        fr = coulomb_frame(u)
        a = solve_a(fr)
        r1, r2 = frame_conservation_residual(u, fr, a)
        return {"frame_r1": r1, "frame_r2": r2}
    raise ConfigError(f"unknown payload {cfg.payload!r}; expected one of {PAYLOADS}")


SLOPE_FLOORS = {"residual_l2": 1.9, "residual_hm1": 1.9, "shatah_hm1": 0.9,
                "cons_hm1": 0.9, "rel17": 0.0, "frame_r1": 0.9, "frame_r2": 0.9}


def run_convergence(cfg):
    if len(cfg.ns) < 3:
        raise ConfigError("convergence experiment needs at least 3 grid sizes")
    header = ["payload", "quantity", "n", "h", "value"]
    rows = []
    series = {}
    for n in cfg.ns:
        vals = convergence_quantities(cfg, n)
        for q, v in sorted(vals.items()):
            rows.append((cfg.payload, q, n, 2.0 / (n - 1), v))
            series.setdefault(q, []).append(v)
    slope_header = ["payload", "quantity", "slope", "pair_slopes", "floor", "pass"]
    slope_rows = []
    summary = []
    for q, vals in sorted(series.items()):
        s = fit_slope(cfg.ns, vals)
        pw = pairwise_slopes(cfg.ns, vals)
        floor = SLOPE_FLOORS.get(q, 0.9)
        ok = s >= floor
        slope_rows.append((cfg.payload, q, s, " ".join(f"{x:.3f}" for x in pw),
                           floor, int(ok)))
        summary.append((f"slope({q}) >= {floor}", ok, f"{s:.2f}"))
    return {"convergence.csv": (header, rows),
            "convergence_slopes.csv": (slope_header, slope_rows)}, summary


RUNNERS = {
    "wente": run_wente,
    "gauge": run_gauge,
    "conslaw": run_conslaw,
    "frames": run_frames,
    "heinz": run_heinz,
    "convergence": run_convergence,
}


def run_experiment(cfg, out_dir=None):
    """Run one experiment; returns (files written, summary, all passed)."""
    out = out_dir or cfg.out
    files, summary = RUNNERS[cfg.experiment](cfg)
    os.makedirs(out, exist_ok=True)
    written = []
    for name, (header, rows) in files.items():
        path = os.path.join(out, name)
        write_csv(path, header, rows)
        written.append(path)
    passed = all(ok for _, ok, _ in summary)
    return written, summary, passed
