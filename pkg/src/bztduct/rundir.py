"""Run-directory output: manifest, delimited node tables, polylines.

Formats are the external contract consumed by the plotting package:

    manifest.json        config echo, region index, file roles, residuals
    region_XXX.csv       x, y, u, v, tau, r, s, region_id
    shocks.csv           x, y, phi, tau_up, tau_down, class, label
    vacuum.csv           x, y, label
    wave_curves.csv      family, tag, tau, u, v, sigma, r, s

All floating-point fields are written with 17 significant digits, so
identical runs produce byte-identical files.
"""

import json
import os

import numpy as np

from . import __version__
from .kinematics import state_from_uv
from .wave_curves import build_wave_curve

__all__ = ["write_run_dir", "dump_wave_curves", "probe_csv_field",
           "run_root"]

_FMT = "%.17g"


def run_root(default="runs"):
    return os.environ.get("BZTDUCT_RUN_ROOT", default)


def _fmt_row(vals):
    out = []
    for v in vals:
        if isinstance(v, str):
            out.append(v)
        else:
            out.append(_FMT % float(v))
    return ",".join(out)


def _region_samples(ctx, region):
    pay = region.payload
    if hasattr(pay, "node_cloud"):
        pts, vals = pay.node_cloud(("u", "v", "tau", "r", "s"))
        return (pts[:, 0], pts[:, 1], vals["u"], vals["v"], vals["tau"],
                vals["r"], vals["s"])
    xs, ys, us, vs, ts = region.boundary_arrays()
    rs, ss = [], []
    for u, v in zip(us, vs):
        st = state_from_uv(ctx, u, v)
        rs.append(st.r)
        ss.append(st.s)
    return xs, ys, us, vs, ts, np.array(rs), np.array(ss)


def write_region_csv(ctx, region, path):
    xs, ys, us, vs, ts, rs, ss = _region_samples(ctx, region)
    with open(path, "w") as fh:
        fh.write("x,y,u,v,tau,r,s,region_id\n")
        for k in range(len(xs)):
            fh.write(_fmt_row([xs[k], ys[k], us[k], vs[k], ts[k], rs[k],
                               ss[k]]) + f",{region.id}\n")


def write_shocks_csv(solution, path):
    with open(path, "w") as fh:
        fh.write("x,y,phi,tau_up,tau_down,class,label\n")
        for rec in solution.shock_polylines:
            n = len(rec["x"])
            phi = np.broadcast_to(rec["phi"], (n,))
            tu = np.broadcast_to(rec["tau_up"], (n,))
            td = np.broadcast_to(rec["tau_down"], (n,))
            for k in range(n):
                fh.write(_fmt_row([rec["x"][k], rec["y"][k], phi[k],
                                   tu[k], td[k]])
                         + f",{rec['class']},{rec['label']}\n")


def write_vacuum_csv(solution, path):
    with open(path, "w") as fh:
        fh.write("x,y,label\n")
        for rec in solution.vacuum_polylines:
            for k in range(len(rec["x"])):
                fh.write(_fmt_row([rec["x"][k], rec["y"][k]])
                         + f",{rec['label']}\n")


def dump_wave_curves(ctx, path, n=160):
    """Both corner wave curves as a tagged polyline table."""
    with open(path, "w") as fh:
        fh.write("family,tag,tau,u,v,sigma,r,s\n")
        for family in (1, 2):
            curve = build_wave_curve(ctx, family=family)
            for seg in curve.segments:
                taus = np.geomspace(max(seg.tau_lo, 1e-12), seg.tau_hi, n)
                taus[0], taus[-1] = seg.tau_lo, seg.tau_hi
                for t in taus:
                    sig = curve.mirror_sign * seg.sigma_at(t)
                    q = ctx.q_of_tau(t)
                    u, v = q * np.cos(sig), q * np.sin(sig)
                    w = ctx.w_of_tau(min(t, ctx.tau_cap * 0.999))
                    fh.write(f"{family},{seg.tag}," + _fmt_row(
                        [t, u, v, sig, sig + w, sig - w]) + "\n")


def _wall_polylines(params, x_max):
    xs = np.array([0.0, x_max])
    return {
        "upper": {"x": xs.tolist(),
                  "y": (1.0 + xs * np.tan(params.theta_plus)).tolist()},
        "lower": {"x": xs.tolist(),
                  "y": (-1.0 + xs * np.tan(params.theta_minus)).tolist()},
    }


def write_run_dir(run_dir, cfg, ctx, solution, toml_echo):
    """Write the complete run directory and return the manifest dict."""
    os.makedirs(run_dir, exist_ok=True)
    index = []
    files = []
    for region in solution.regions:
        name = f"region_{region.id:03d}.csv"
        write_region_csv(ctx, region, os.path.join(run_dir, name))
        index.append({"id": region.id, "kind": region.kind, "file": name,
                      "area": region.area(),
                      "flux_imbalance": region.flux_imbalance()})
        files.append({"name": name, "role": "region-nodes"})

    write_shocks_csv(solution, os.path.join(run_dir, "shocks.csv"))
    files.append({"name": "shocks.csv", "role": "shock-polylines"})
    write_vacuum_csv(solution, os.path.join(run_dir, "vacuum.csv"))
    files.append({"name": "vacuum.csv", "role": "vacuum-polylines"})
    dump_wave_curves(ctx, os.path.join(run_dir, "wave_curves.csv"))
    files.append({"name": "wave_curves.csv", "role": "wave-curves"})

    xs = [x for reg in solution.regions
          for x in reg.boundary_arrays()[0]]
    x_max = float(max(xs)) if xs else 1.0

    lattices = [r.payload for r in solution.regions
                if hasattr(r.payload, "invariant_drift")]
    drifts = [lat.invariant_drift() for lat in lattices]
    residuals = {
        "max_flux_imbalance": solution.worst_flux_imbalance(),
        "max_r_drift": max((d[0] for d in drifts), default=0.0),
        "max_s_drift": max((d[1] for d in drifts), default=0.0),
        "max_bernoulli": max((lat.bernoulli_residual()
                              for lat in lattices), default=0.0),
    }
    manifest = {
        "tool": "bztduct",
        "version": __version__,
        "config_toml": toml_echo,
        "interaction": {k: v for k, v in solution.interaction.items()
                        if k in ("pair", "interaction_index",
                                 "orchestrated", "upper", "lower")},
        "cycles_run": solution.cycles_run,
        "truncated": solution.truncated,
        "has_vacuum": solution.has_vacuum,
        "notes": solution.notes,
        "walls": _wall_polylines(solution.params, x_max),
        "regions": index,
        "files": files,
        "bernoulli": {"B": ctx.B, "q_inf": ctx.q_inf, "R_cal": ctx.R_cal,
                      "R_cal_err": ctx.R_cal_err},
        "residuals": residuals,
    }
    with open(os.path.join(run_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def probe_csv_field(run_dir, x, y):
    """Nearest-region bilinear probe over the dumped node tables.

    Reads only the CSV artifacts (no solver state); intended for
    post-hoc checks of a run directory."""
    import csv
    from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
    with open(os.path.join(run_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    pts, vals = [], []
    for rec in manifest["regions"]:
        with open(os.path.join(run_dir, rec["file"])) as fh:
            for row in csv.DictReader(fh):
                pts.append((float(row["x"]), float(row["y"])))
                vals.append((float(row["u"]), float(row["v"]),
                             float(row["tau"])))
    pts = np.asarray(pts)
    vals = np.asarray(vals)
    interp = LinearNDInterpolator(pts, vals)
    out = interp(x, y)
    if np.any(np.isnan(out)):
        out = NearestNDInterpolator(pts, vals)(x, y)
    return np.atleast_2d(out)[0]
