"""Run-directory reading: manifest plus delimited node tables.

The formats are the solver's documented output contract; nothing here
imports the solver."""

import csv
import json
import os

import numpy as np

__all__ = ["RunData", "load_run"]


class RunData:
    """Parsed contents of one run directory."""

    def __init__(self, run_dir, manifest, regions, shocks, vacuum,
                 wave_curves):
        self.run_dir = run_dir
        self.manifest = manifest
        self.regions = regions          # id -> dict of column arrays
        self.shocks = shocks            # list of dicts with polylines
        self.vacuum = vacuum
        self.wave_curves = wave_curves  # (family, tag) -> column arrays

    @property
    def region_ids(self):
        return [rec["id"] for rec in self.manifest["regions"]]

    def region_kind(self, rid):
        for rec in self.manifest["regions"]:
            if rec["id"] == rid:
                return rec["kind"]
        raise KeyError(rid)

    def config_table(self, section):
        import re
        text = self.manifest["config_toml"]
        out = {}
        current = None
        for line in text.splitlines():
            line = line.strip()
            m = re.match(r"\[(\w+)\]", line)
            if m:
                current = m.group(1)
                continue
            if current == section and "=" in line:
                k, v = (t.strip() for t in line.split("=", 1))
                try:
                    out[k] = float(v)
                except ValueError:
                    out[k] = v.strip('"')
        return out


def _read_csv_columns(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {}
    out = {}
    for key in rows[0]:
        vals = [r[key] for r in rows]
        try:
            out[key] = np.array([float(v) for v in vals])
        except ValueError:
            out[key] = np.array(vals)
    return out


def load_run(run_dir):
    with open(os.path.join(run_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    missing = [rec["name"] for rec in manifest["files"]
               if not os.path.exists(os.path.join(run_dir, rec["name"]))]
    if missing:
        raise FileNotFoundError(
            f"run directory {run_dir} is missing files listed in its "
            f"manifest: {missing}")

    regions = {}
    for rec in manifest["regions"]:
        regions[rec["id"]] = _read_csv_columns(
            os.path.join(run_dir, rec["file"]))

    shocks = []
    cols = _read_csv_columns(os.path.join(run_dir, "shocks.csv"))
    if cols:
        for label in sorted(set(cols["label"])):
            sel = cols["label"] == label
            shocks.append({k: v[sel] for k, v in cols.items()})

    vacuum = []
    cols = _read_csv_columns(os.path.join(run_dir, "vacuum.csv"))
    if cols:
        for label in sorted(set(cols["label"])):
            sel = cols["label"] == label
            vacuum.append({k: v[sel] for k, v in cols.items()})

    wave_curves = {}
    cols = _read_csv_columns(os.path.join(run_dir, "wave_curves.csv"))
    if cols:
        fams = cols["family"].astype(int) if cols["family"].dtype != object \
            else cols["family"]
        for fam in sorted(set(fams.tolist())):
            for tag in sorted(set(cols["tag"].tolist())):
                sel = (fams == fam) & (cols["tag"] == tag)
                if np.any(sel):
                    wave_curves[(int(fam), tag)] = {
                        k: v[sel] for k, v in cols.items()}
    return RunData(run_dir, manifest, regions, shocks, vacuum, wave_curves)
