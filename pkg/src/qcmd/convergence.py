"""The eps-sweep harness.

For a decreasing list of eps values, run matched quantum and classical
evolutions, pair both against a shared probe dictionary, reduce to a
per-snapshot weak distance

    D(t; eps) = max_phi |<W_eps, phi> - int phi dW_cl| / ||phi||_A

over the in-scope probes, and fit decay rates.  Convergence is proved
along subsequences with no rate, so fitted slopes are reported as
measurements, never asserted against a theoretical value.

Probes whose support touches the singular set (or a cone apex) never
enter the weak distance; their pairings are still recorded under their
scope flag.
"""

import hashlib
import json
import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import classical as cl
from . import estimates as est
from . import potential as pot
from . import quantum as qm
from . import wigner as wg
from .errors import (
    BoundaryContamination,
    ConfigError,
    CorruptFile,
    DegenerateFit,
    SchemaVersionMismatch,
    SingularApproach,
)
from .fieldio import write_csv
from .grid import Grid

SCHEMA_VERSION = 1
NOISE_FLOOR = 1e-9


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _require(d, key, path):
    if key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return d[key]


@dataclass(frozen=True)
class GridRule:
    """N(eps): smallest power of two with h <= eps*pi/(resolution_factor*p_scale).

    ``p_scale`` covers packet and dictionary momenta and is computed per
    eps; explicit bounds keep memory finite.
    """

    extent: tuple
    stagger: tuple
    min_npts: int = 64
    max_npts: int = 1 << 16
    resolution_factor: float = 3.0

    def npts(self, eps, p_scale, dim):
        out = []
        for i in range(dim):
            target = self.extent[i] * self.resolution_factor * p_scale / (eps * math.pi)
            n = self.min_npts
            while n < target:
                n *= 2
                if n > self.max_npts:
                    raise ConfigError(
                        "grid.max_npts",
                        f"eps = {eps} needs N > {self.max_npts} on axis {i}",
                    )
            out.append(n)
        return tuple(out)

    def build(self, eps, p_scale, dim):
        lower = tuple(-L / 2.0 for L in self.extent)
        return Grid(dim, lower, self.extent, self.npts(eps, p_scale, dim), self.stagger)


@dataclass(frozen=True)
class SweepConfig:
    potential: pot.PotentialSpec
    packet: qm.PacketSpec
    eps_list: tuple
    final_time: float
    snapshot_times: tuple
    dictionary: wg.TestDictionary
    grid_rule: GridRule
    dt_coefficient: float = 0.01
    classical_mode: str = "delta"
    classical_n: int = 1
    classical_dt: float = 1e-3
    classical_eta: float = 0.05
    seed: int = 0
    boundary_tol: float = 1e-6
    delta_ladder: tuple = ()
    r_ladder: tuple = ()
    label: str = "sweep"

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        if not eps:
            raise ConfigError("eps", "eps list must be nonempty")
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ConfigError("eps", "every eps must lie in (0, 1]")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps", "eps list must be strictly decreasing")
        object.__setattr__(self, "eps_list", eps)
        ts = tuple(float(t) for t in self.snapshot_times)
        if not ts:
            raise ConfigError("snapshot_times", "need at least one snapshot")
        if any(t < 0.0 or t > self.final_time + 1e-12 for t in ts):
            raise ConfigError("snapshot_times", "snapshots must lie in [0, T]")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("snapshot_times", "snapshot times must increase")
        object.__setattr__(self, "snapshot_times", ts)
        if len(self.dictionary) == 0:
            raise ConfigError("dictionary", "dictionary must be nonempty")
        if self.packet.dim != self.potential.dim:
            raise ConfigError("packet", "packet dimension != potential dimension")

    def p_scale(self, eps):
        spread = self.packet.momentum_spread(eps)
        scale = max(
            abs(p0) + 3.0 * s for p0, s in zip(self.packet.p0, spread)
        )
        for phi in self.dictionary:
            scale = max(
                scale,
                max(abs(c) + 3.0 * s for c, s in zip(phi.center_p, phi.sigma_p)),
            )
        return scale

    def to_dict(self):
        return {
            "label": self.label,
            "potential": self.potential.to_dict(),
            "packet": self.packet.to_dict(),
            "eps": list(self.eps_list),
            "final_time": self.final_time,
            "snapshot_times": list(self.snapshot_times),
            "dt_coefficient": self.dt_coefficient,
            "grid": {
                "extent": list(self.grid_rule.extent),
                "stagger": list(self.grid_rule.stagger),
                "min_npts": self.grid_rule.min_npts,
                "max_npts": self.grid_rule.max_npts,
                "resolution_factor": self.grid_rule.resolution_factor,
            },
            "dictionary": self.dictionary.to_dict(),
            "classical": {
                "mode": self.classical_mode,
                "n": self.classical_n,
                "dt": self.classical_dt,
                "eta": self.classical_eta,
            },
            "seed": self.seed,
            "boundary_tol": self.boundary_tol,
            "delta_ladder": list(self.delta_ladder),
            "r_ladder": list(self.r_ladder),
        }

    @classmethod
    def from_dict(cls, d):
        dim = int(_require(_require(d, "potential", ""), "dim", "potential"))
        gd = _require(d, "grid", "")
        extent = gd.get("extent")
        if extent is None:
            raise ConfigError("grid.extent", "missing required key")
        extent = tuple(float(v) for v in np.broadcast_to(np.atleast_1d(extent), (dim,)))
        stagger = gd.get("stagger", 0.5)
        stagger = tuple(float(v) for v in np.broadcast_to(np.atleast_1d(stagger), (dim,)))
        rule = GridRule(
            extent=extent,
            stagger=stagger,
            min_npts=int(gd.get("min_npts", 64)),
            max_npts=int(gd.get("max_npts", 1 << 16)),
            resolution_factor=float(gd.get("resolution_factor", 3.0)),
        )
        cld = d.get("classical", {})
        try:
            dictionary = wg.TestDictionary.from_dict(_require(d, "dictionary", ""))
        except (KeyError, ValueError) as exc:
            raise ConfigError("dictionary", str(exc)) from exc
        return cls(
            potential=pot.PotentialSpec.from_dict(_require(d, "potential", "")),
            packet=qm.PacketSpec.from_dict(_require(d, "packet", "")),
            eps_list=tuple(_require(d, "eps", "")),
            final_time=float(_require(d, "final_time", "")),
            snapshot_times=tuple(_require(d, "snapshot_times", "")),
            dictionary=dictionary,
            grid_rule=rule,
            dt_coefficient=float(d.get("dt_coefficient", 0.01)),
            classical_mode=cld.get("mode", "delta"),
            classical_n=int(cld.get("n", 1)),
            classical_dt=float(cld.get("dt", 1e-3)),
            classical_eta=float(cld.get("eta", 0.05)),
            seed=int(d.get("seed", 0)),
            boundary_tol=float(d.get("boundary_tol", 1e-6)),
            delta_ladder=tuple(d.get("delta_ladder", ())),
            r_ladder=tuple(d.get("r_ladder", ())),
            label=d.get("label", "sweep"),
        )


def config_hash(config):
    payload = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


# ---------------------------------------------------------------------------
# the sweep
# ---------------------------------------------------------------------------

def _quantum_snapshots(config, eps):
    grid = config.grid_rule.build(eps, config.p_scale(eps), config.potential.dim)
    wf = qm.make_packet(grid, eps, config.packet)
    h0 = qm.h_norm(wf, config.potential)
    snaps = []
    for t in config.snapshot_times:
        span = t - wf.time
        if span > 1e-15:
            nsteps = max(1, math.ceil(span / (config.dt_coefficient * eps)))
            wf = qm.propagate(
                wf,
                config.potential,
                span / nsteps,
                nsteps,
                max_dt_over_eps=config.dt_coefficient,
                boundary_tol=config.boundary_tol,
            )
        snaps.append(wf)
    return snaps, h0


def _classical_snapshots(config, eps):
    ens = cl.sample_initial(
        config.packet,
        config.classical_mode,
        n=config.classical_n,
        seed=config.seed,
        eps=None if config.classical_mode == "delta" else eps,
    )
    return cl.trajectory(
        ens,
        config.potential,
        config.snapshot_times,
        config.classical_dt,
        eta=config.classical_eta,
        on_singular="drop",
    )


def weak_distance(quantum_pairings, classical_pairings, dictionary):
    """max over in-scope probes of |quantum - classical| / ||phi||_A."""
    best = 0.0
    for j, phi in enumerate(dictionary):
        if phi.scope != "standard":
            continue
        best = max(best, abs(quantum_pairings[j] - classical_pairings[j]) / phi.a_norm())
    return best


def _run_cell(config, eps):
    cell = {"eps": eps, "status": "ok", "reason": ""}
    try:
        qsnaps, h0 = _quantum_snapshots(config, eps)
        csnaps = _classical_snapshots(config, eps)
    except (BoundaryContamination, SingularApproach) as exc:
        cell["status"] = "aborted"
        cell["reason"] = f"{type(exc).__name__}: {exc}"
        return cell
    cell["grid_npts"] = list(qsnaps[0].grid.npts)
    cell["h_norm0"] = h0
    cell["times"] = list(config.snapshot_times)
    labels = [phi.label or f"phi-{j}" for j, phi in enumerate(config.dictionary)]
    scopes = [phi.scope for phi in config.dictionary]
    qp = [[wg.pair(s, phi) for phi in config.dictionary] for s in qsnaps]
    cp = [[cl.measure_pair(s, phi) for phi in config.dictionary] for s in csnaps]
    cell["probe_labels"] = labels
    cell["probe_scopes"] = scopes
    cell["quantum_pairings"] = qp
    cell["classical_pairings"] = cp
    cell["weak_distance"] = [
        weak_distance(q, c, config.dictionary) for q, c in zip(qp, cp)
    ]
    cell["dropped_weight"] = csnaps[-1].dropped_weight
    report = est.build_report(
        run_id=f"{config.label}-eps-{eps:g}",
        snapshots=qsnaps,
        spec=config.potential,
        delta_ladder=config.delta_ladder,
        r_ladder=config.r_ladder,
    )
    cell["estimates"] = report.to_dict()
    return cell


def rate_fit(eps_values, distances, noise_floor=NOISE_FLOOR):
    """Least squares on (log eps, log D); returns slope, intercept, residual.

    Points with D <= noise_floor are excluded (listed in the result);
    fewer than 3 usable points raises DegenerateFit.
    """
    eps_values = np.asarray(eps_values, dtype=float)
    distances = np.asarray(distances, dtype=float)
    usable = distances > noise_floor
    excluded = [float(e) for e in eps_values[~usable]]
    if np.count_nonzero(usable) < 3:
        raise DegenerateFit(
            f"only {int(np.count_nonzero(usable))} usable points (floor {noise_floor:g})"
        )
    lx = np.log(eps_values[usable])
    ly = np.log(distances[usable])
    A = np.vstack([lx, np.ones_like(lx)]).T
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ sol
    return {
        "slope": float(sol[0]),
        "intercept": float(sol[1]),
        "residual": float(np.sqrt(np.mean(resid**2))),
        "excluded": excluded,
    }


@dataclass
class SweepResult:
    config: dict
    cells: list
    rates: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def cell(self, eps):
        for c in self.cells:
            if abs(c["eps"] - eps) < 1e-15:
                return c
        raise KeyError(f"no cell for eps = {eps}")

    def complete(self):
        return all(c["status"] == "ok" for c in self.cells)

    def to_dict(self):
        return {
            "config": self.config,
            "cells": self.cells,
            "rates": self.rates,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            config=d["config"],
            cells=d["cells"],
            rates=d["rates"],
            metadata=d["metadata"],
        )


def run_sweep(config, workers=1):
    """Run every eps cell (optionally in parallel), merge in eps order.

    Per-cell aborts (BoundaryContamination, SingularApproach) are recorded
    and the sweep continues; the result is marked partial.
    """
    t_start = _time.time()
    if workers > 1 and len(config.eps_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, [config] * len(config.eps_list), config.eps_list))
    else:
        cells = [_run_cell(config, eps) for eps in config.eps_list]
    rates = []
    ok = [c for c in cells if c["status"] == "ok"]
    if len(ok) >= 3:
        for j, t in enumerate(config.snapshot_times):
            eps_vals = [c["eps"] for c in ok]
            dists = [c["weak_distance"][j] for c in ok]
            try:
                fit = rate_fit(eps_vals, dists)
            except DegenerateFit as exc:
                fit = {"error": str(exc)}
            fit["t"] = t
            rates.append(fit)
    import numpy as _np

    metadata = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config_hash(config),
        "package_version": __version__,
        "numpy_version": _np.__version__,
        "classical_backend": cl.BACKEND,
        "complete": all(c["status"] == "ok" for c in cells),
    }
    result = SweepResult(config.to_dict(), cells, rates, metadata)
    result.wall_time = _time.time() - t_start  # not persisted in results.json
    return result


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _canonical(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def persist(result, path):
    """results.json = {schema_version, payload, checksum(payload)}.

    Deterministic for identical configs and seeds: volatile fields (wall
    time) live in the run manifest, not here.
    """
    payload = result.to_dict()
    body = _canonical(payload)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "checksum": hashlib.sha256(body.encode()).hexdigest(),
        "payload": payload,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)


def load(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: schema {doc.get('schema_version')} != {SCHEMA_VERSION}"
        )
    body = _canonical(doc.get("payload", {}))
    if hashlib.sha256(body.encode()).hexdigest() != doc.get("checksum"):
        raise CorruptFile(f"{path}: checksum mismatch")
    return SweepResult.from_dict(doc["payload"])


def write_run_directory(result, out_dir):
    """results.json plus the CSV views the plotting layer consumes."""
    os.makedirs(out_dir, exist_ok=True)
    persist(result, os.path.join(out_dir, "results.json"))
    pair_rows = []
    dist_rows = []
    cons_rows = []
    mass_rows = []
    tail_rows = []
    for c in result.cells:
        if c["status"] != "ok":
            continue
        eps = c["eps"]
        for i, t in enumerate(c["times"]):
            dist_rows.append([eps, t, c["weak_distance"][i]])
            for j, label in enumerate(c["probe_labels"]):
                pair_rows.append(
                    [eps, t, label, c["probe_scopes"][j],
                     c["quantum_pairings"][i][j], c["classical_pairings"][i][j]]
                )
            rep = c["estimates"]
            cons_rows.append(
                [eps, t, rep["norms"][i], rep["energies"][i],
                 rep["kinetics"][i], rep["singular_l2s"][i]]
            )
            if rep["mass_ladders"]:
                for dl, m in zip(rep["delta_ladder"], rep["mass_ladders"][i]):
                    mass_rows.append([eps, t, dl, m])
            if rep["tail_ladders"]:
                for R, m in zip(rep["r_ladder"], rep["tail_ladders"][i]):
                    tail_rows.append([eps, t, R, m])
    write_csv(
        os.path.join(out_dir, "pairings.csv"),
        ["eps", "t", "phi_id", "scope", "quantum", "classical"],
        pair_rows,
    )
    write_csv(
        os.path.join(out_dir, "distances.csv"),
        ["eps", "t", "weak_distance"],
        dist_rows,
    )
    write_csv(
        os.path.join(out_dir, "conservation.csv"),
        ["eps", "t", "norm", "energy", "kinetic", "singular_l2"],
        cons_rows,
    )
    if mass_rows:
        write_csv(
            os.path.join(out_dir, "mass_ladder.csv"),
            ["eps", "t", "delta", "mass"],
            mass_rows,
        )
    if tail_rows:
        write_csv(
            os.path.join(out_dir, "tail_ladder.csv"),
            ["eps", "t", "R", "tail"],
            tail_rows,
        )
