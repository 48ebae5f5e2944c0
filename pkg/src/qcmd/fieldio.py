"""Export formats.

Field snapshots: raw little-endian float64 (re, im) pairs in row-major
grid order, beside a JSON sidecar carrying the grid metadata, eps, time
and the potential hash.  Tabular outputs are plain CSV with full-precision
floats (%.17g), so equal runs produce byte-identical files.
"""

import csv
import json

import numpy as np

from .errors import CorruptFile, SchemaVersionMismatch
from .grid import Grid
from .quantum import WaveFunction

SCHEMA_VERSION = 1


def fmt(x):
    """Full-precision, locale-free float formatting."""
    return format(float(x), ".17g")


def save_wavefunction(wf, base_path, potential_hash=""):
    data = np.empty(wf.values.size * 2)
    flat = wf.values.reshape(-1)
    data[0::2] = flat.real
    data[1::2] = flat.imag
    data.astype("<f8").tofile(str(base_path) + ".bin")
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "kind": "wavefunction",
        "grid": wf.grid.to_dict(),
        "eps": wf.eps,
        "time": wf.time,
        "potential_hash": potential_hash,
    }
    with open(str(base_path) + ".json", "w") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)


def load_wavefunction(base_path):
    with open(str(base_path) + ".json") as f:
        sidecar = json.load(f)
    if sidecar.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"sidecar schema {sidecar.get('schema_version')} != {SCHEMA_VERSION}"
        )
    grid = Grid.from_dict(sidecar["grid"])
    raw = np.fromfile(str(base_path) + ".bin", dtype="<f8")
    n = int(np.prod(grid.npts))
    if raw.size != 2 * n:
        raise CorruptFile(f"field file holds {raw.size} floats, expected {2 * n}")
    values = (raw[0::2] + 1j * raw[1::2]).reshape(grid.npts)
    return WaveFunction(grid, float(sidecar["eps"]), values, float(sidecar["time"])), sidecar


def save_phase_space_field(field, base_path, potential_hash=""):
    """Same raw convention as quantum fields (imaginary half written as 0)."""
    data = np.empty(field.values.size * 2)
    data[0::2] = field.values.reshape(-1)
    data[1::2] = 0.0
    data.astype("<f8").tofile(str(base_path) + ".bin")
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "kind": "phase_space_field",
        "grid": field.xgrid.to_dict(),
        "paxes": [[fmt(v) for v in ax] for ax in field.paxes],
        "eps": field.eps,
        "time": field.time,
        "potential_hash": potential_hash,
    }
    with open(str(base_path) + ".json", "w") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)


def write_csv(path, header, rows):
    """Rows of floats/strings; floats rendered at full precision."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def save_ensemble_csv(path, snapshots):
    """Ensemble snapshots as (t, id, x..., p..., w) rows."""
    dim = snapshots[0].dim
    header = (
        ["t", "id"]
        + [f"x{i}" for i in range(dim)]
        + [f"p{i}" for i in range(dim)]
        + ["w"]
    )
    rows = []
    for snap in snapshots:
        for i in range(len(snap)):
            rows.append(
                [snap.time, i]
                + [float(v) for v in snap.x[i]]
                + [float(v) for v in snap.p[i]]
                + [float(snap.w[i])]
            )
    write_csv(path, header, rows)
