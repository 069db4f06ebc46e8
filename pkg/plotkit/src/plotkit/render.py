"""Figure renderers for run-directory dumps.

Conventions: oblique shocks are drawn in red, characteristic data in
per-region colors, vacuum boundaries as black dashed lines.  Rendering
never writes into the run directory."""

import json

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reader import load_run

__all__ = ["render", "render_duct_map", "render_wave_curves",
           "render_hodograph", "render_ramp_sectors", "FIGURE_KINDS"]

FIGURE_KINDS = ("duct-map", "wave-curves", "hodograph", "ramp-sectors")


def render_duct_map(data, out_path):
    """Region node clouds, walls, shocks and vacuum boundaries."""
    fig, ax = plt.subplots(figsize=(11, 6))
    cmap = plt.get_cmap("tab20")
    for k, rid in enumerate(data.region_ids):
        cols = data.regions[rid]
        if not cols:
            continue
        ax.plot(cols["x"], cols["y"], ".", ms=2.0,
                color=cmap(k % 20),
                label=f"{rid}: {data.region_kind(rid)}")
    for wall in data.manifest["walls"].values():
        ax.plot(wall["x"], wall["y"], "k-", lw=1.6)
    for sh in data.shocks:
        ax.plot(sh["x"], sh["y"], "r-", lw=2.0)
    for vac in data.vacuum:
        ax.plot(vac["x"], vac["y"], "k--", lw=1.6)
    handles, labels = ax.get_legend_handles_labels()
    ax.legend(handles, labels, fontsize=6, ncol=2, loc="upper left",
              framealpha=0.9)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"duct flow map ({data.manifest['interaction']['pair']})")
    ax.set_aspect("equal", adjustable="datalim")
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"legend_labels": labels, "n_shocks": len(data.shocks),
            "n_vacuum": len(data.vacuum)}


def render_wave_curves(data, out_path):
    """Both corner wave curves in the velocity plane with tagged
    segments and join markers."""
    fig, ax = plt.subplots(figsize=(7, 6))
    styles = {"F": "-", "S": "--", "SF": "-.", "FS": ":", "FSF": "-"}
    labels = []
    for (fam, tag), cols in sorted(data.wave_curves.items()):
        lab = f"W{fam} {tag}"
        ax.plot(cols["u"], cols["v"], styles.get(tag, "-"), lw=1.6,
                label=lab)
        ax.plot(cols["u"][:1], cols["v"][:1], "ko", ms=3)
        labels.append(lab)
    ax.legend(fontsize=8)
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_title("rarefactive wave curves")
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"legend_labels": labels, "n_segments": len(data.wave_curves)}


def render_hodograph(data, out_path):
    """All node invariants in the (r, s) plane with the invariant
    rectangle recomputed from the manifest."""
    duct = data.config_table("duct")
    R_cal = data.manifest["bernoulli"]["R_cal"]
    th_p, th_m = duct["theta_plus"], duct["theta_minus"]
    fig, ax = plt.subplots(figsize=(7, 6))
    n_inside = n_total = 0
    for rid in data.region_ids:
        cols = data.regions[rid]
        if not cols:
            continue
        r, s = cols["r"], cols["s"]
        mid = 0.5 * (r + s)
        half = 0.5 * (r - s)
        inside = ((mid >= th_m - 1e-9) & (mid <= th_p + 1e-9)
                  & (half >= -1e-9) & (half < R_cal))
        n_inside += int(inside.sum())
        n_total += len(r)
        ax.plot(r, s, ".", ms=2)
    # invariant rectangle: theta_- <= (r+s)/2 <= theta_+, 0 <= (r-s)/2 < R
    corners = np.array([
        [th_m, th_m], [th_p, th_p],
        [th_p + R_cal, th_p - R_cal], [th_m + R_cal, th_m - R_cal],
        [th_m, th_m]])
    ax.plot(corners[:, 0], corners[:, 1], "k-", lw=1.4)
    ax.set_xlabel("r")
    ax.set_ylabel("s")
    ax.set_title(f"invariant plane ({n_inside}/{n_total} samples inside)")
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"n_inside": n_inside, "n_total": n_total}


def render_ramp_sectors(json_path, out_path):
    """Angular sector chart of a corner solution dump."""
    with open(json_path) as fh:
        rec = json.load(fh)
    fig, ax = plt.subplots(figsize=(7, 6),
                           subplot_kw={"projection": "polar"})
    colors = {"constant": "#88aacc", "fan": "#66cc88",
              "shock": "#cc3333", "vacuum": "#999999"}
    labels = []
    for sec in rec["sectors"]:
        lo, hi = sorted((sec["angle_lo"], sec["angle_hi"]))
        if sec["kind"] == "shock":
            ax.plot([lo, lo], [0, 1], color=colors["shock"], lw=2.4)
        else:
            ang = np.linspace(lo, hi, 30)
            ax.fill_between(ang, 0, 1, color=colors[sec["kind"]],
                            alpha=0.6)
        if sec["kind"] not in labels:
            labels.append(sec["kind"])
    ax.set_title(f"corner configuration: {rec['config_tag']} "
                 f"(theta = {rec['theta']:.4f})")
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return {"config_tag": rec["config_tag"], "kinds": labels}


def render(path, kind, out_path):
    """Dispatch on the figure kind; returns a small info dict."""
    if kind not in FIGURE_KINDS:
        raise ValueError(f"unsupported figure kind {kind!r}; choose from "
                         f"{FIGURE_KINDS}")
    if kind == "ramp-sectors":
        return render_ramp_sectors(path, out_path)
    data = load_run(path)
    if kind == "duct-map":
        return render_duct_map(data, out_path)
    if kind == "wave-curves":
        return render_wave_curves(data, out_path)
    return render_hodograph(data, out_path)
