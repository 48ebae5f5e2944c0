"""Command-line entry point.

Exit codes: 0 success, 1 a recorded check failed, 2 invalid configuration
(message names the offending key), 3 runtime abort with partial outputs
persisted.
"""

import argparse
import datetime
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import classical as cl
from . import convergence as cv
from . import estimates as est
from . import fieldio
from . import potential as pot
from . import quantum as qm
from .errors import (
    BoundaryContamination,
    ConfigError,
    QcmdError,
    SingularApproach,
)


def _load_config(path):
    try:
        if path == "-":
            raw = json.load(sys.stdin)
        else:
            with open(path) as f:
                raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}")
    return cv.SweepConfig.from_dict(raw)


def _write_manifest(out_dir, args, config, started, extra=None):
    manifest = {
        "command_line": " ".join(sys.argv),
        "config_hash": cv.config_hash(config),
        "started_at": started,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "versions": {
            "qcmd": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "classical_backend": cl.BACKEND,
        "schema_version": cv.SCHEMA_VERSION,
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)


def _plan_lines(config):
    lines = []
    for eps in config.eps_list:
        npts = config.grid_rule.npts(eps, config.p_scale(eps), config.potential.dim)
        total = int(np.prod(npts))
        dt = config.dt_coefficient * eps
        steps = int(np.ceil(config.final_time / dt)) if config.final_time > 0 else 0
        mem = total * 16 * 6 / 1e6
        lines.append(
            f"eps={eps:g} N={npts} dt={dt:g} steps~{steps} mem~{mem:.1f}MB"
        )
    return lines


def cmd_validate(args):
    _load_config(args.config)
    print("config ok")
    return 0


def cmd_sweep(args):
    config = _load_config(args.config)
    if args.seed is not None:
        config = cv.SweepConfig.from_dict({**config.to_dict(), "seed": args.seed})
    if args.dry_run:
        for line in _plan_lines(config):
            print(line)
        return 0
    out_dir = args.out or os.path.join("runs", config.label)
    os.makedirs(out_dir, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.time()
    result = cv.run_sweep(config, workers=args.threads)
    cv.write_run_directory(result, out_dir)
    _write_manifest(out_dir, args, config, started, {"wall_time_s": time.time() - t0})
    for c in result.cells:
        if c["status"] == "ok":
            print(f"eps={c['eps']:g} ok  D(t_final)={c['weak_distance'][-1]:.3e}")
        else:
            print(f"eps={c['eps']:g} ABORTED  {c['reason']}")
    for fit in result.rates:
        if "slope" in fit:
            print(f"t={fit['t']:g}: fitted slope {fit['slope']:.3f}")
    if not result.complete():
        return 3
    return 0


def cmd_run_quantum(args):
    config = _load_config(args.config)
    out_dir = args.out or os.path.join("runs", config.label + "-quantum")
    os.makedirs(out_dir, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    phash = pot.potential_hash(config.potential)
    code = 0
    rows = []
    for eps in config.eps_list:
        try:
            snaps, h0 = cv._quantum_snapshots(config, eps)
        except (BoundaryContamination, SingularApproach) as exc:
            print(f"eps={eps:g} ABORTED {type(exc).__name__}: {exc}")
            code = 3
            continue
        for s in snaps:
            rows.append(
                [eps, s.time, qm.norm(s), qm.energy(s, config.potential),
                 qm.kinetic_energy(s)]
            )
        if args.export_fields:
            for i, s in enumerate(snaps):
                fieldio.save_wavefunction(
                    s, os.path.join(out_dir, f"field-eps{eps:g}-{i:03d}"), phash
                )
        print(f"eps={eps:g} ok  h_norm(0)={h0:.4g}")
    fieldio.write_csv(
        os.path.join(out_dir, "conservation.csv"),
        ["eps", "t", "norm", "energy", "kinetic"],
        rows,
    )
    _write_manifest(out_dir, args, config, started)
    return code


def cmd_run_classical(args):
    config = _load_config(args.config)
    out_dir = args.out or os.path.join("runs", config.label + "-classical")
    os.makedirs(out_dir, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    seed = args.seed if args.seed is not None else config.seed
    eps = config.eps_list[0]
    ens = cl.sample_initial(
        config.packet,
        config.classical_mode,
        n=config.classical_n,
        seed=seed,
        eps=None if config.classical_mode == "delta" else eps,
    )
    try:
        snaps = cl.trajectory(
            ens, config.potential, config.snapshot_times, config.classical_dt,
            eta=config.classical_eta, on_singular="drop",
        )
    except SingularApproach as exc:
        print(f"ABORTED: {exc}")
        return 3
    fieldio.save_ensemble_csv(os.path.join(out_dir, "ensembles.csv"), snaps)
    residuals = {}
    for j, phi in enumerate(config.dictionary):
        if phi.window is None:
            continue
        label = phi.label or f"phi-{j}"
        try:
            residuals[label] = cl.liouville_residual(snaps, config.potential, phi)
        except QcmdError as exc:
            residuals[label] = f"skipped: {exc}"
    with open(os.path.join(out_dir, "residuals.json"), "w") as f:
        json.dump(residuals, f, indent=1, sort_keys=True)
    _write_manifest(out_dir, args, config, started)
    print(f"wrote {len(snaps)} snapshots; dropped weight {snaps[-1].dropped_weight:g}")
    return 0


def cmd_check_estimates(args):
    config = _load_config(args.config)
    out_dir = args.out or os.path.join("runs", config.label + "-estimates")
    os.makedirs(out_dir, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    all_ok = True
    code = 0
    for eps in config.eps_list:
        try:
            snaps, _ = cv._quantum_snapshots(config, eps)
        except (BoundaryContamination, SingularApproach) as exc:
            print(f"eps={eps:g} ABORTED {type(exc).__name__}: {exc}")
            code = 3
            continue
        report = est.build_report(
            run_id=f"{config.label}-eps-{eps:g}",
            snapshots=snaps,
            spec=config.potential,
            delta_ladder=config.delta_ladder,
            r_ladder=config.r_ladder,
        )
        with open(os.path.join(out_dir, f"estimates-eps{eps:g}.json"), "w") as f:
            json.dump(report.to_dict(), f, indent=1, sort_keys=True)
        for name, chk in report.checks.items():
            status = "pass" if chk.get("passed") else "FAIL"
            all_ok = all_ok and bool(chk.get("passed"))
            print(f"eps={eps:g} {name}: {status}")
    _write_manifest(out_dir, args, config, started)
    if code:
        return code
    return 0 if all_ok else 1


def cmd_export_field(args):
    config = _load_config(args.config)
    eps = args.eps if args.eps is not None else config.eps_list[0]
    grid = config.grid_rule.build(eps, config.p_scale(eps), config.potential.dim)
    wf = qm.make_packet(grid, eps, config.packet)
    t = args.time
    if t > 0:
        import math

        nsteps = max(1, math.ceil(t / (config.dt_coefficient * eps)))
        wf = qm.propagate(
            wf, config.potential, t / nsteps, nsteps,
            max_dt_over_eps=config.dt_coefficient,
            boundary_tol=config.boundary_tol,
        )
    fieldio.save_wavefunction(wf, args.out, pot.potential_hash(config.potential))
    print(f"wrote {args.out}.bin / .json at t={wf.time:g}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="qcmd",
        description="semiclassical quantum/classical dynamics laboratory",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("config", help="JSON config path ('-' for stdin)")
        if out:
            sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument(
            "--threads", type=int, default=os.cpu_count() or 1,
            help="worker processes for sweep cells",
        )

    sp = sub.add_parser("validate-config", help="check a config and exit")
    common(sp, out=False)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("sweep", help="full eps sweep with weak distances")
    common(sp)
    sp.add_argument("--dry-run", action="store_true",
                    help="print the resolved plan (grids, memory) and exit")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("run-quantum", help="quantum runs only")
    common(sp)
    sp.add_argument("--export-fields", action="store_true")
    sp.set_defaults(fn=cmd_run_quantum)

    sp = sub.add_parser("run-classical", help="classical transport only")
    common(sp)
    sp.set_defaults(fn=cmd_run_classical)

    sp = sub.add_parser("check-estimates", help="a priori estimate checks")
    common(sp)
    sp.set_defaults(fn=cmd_check_estimates)

    sp = sub.add_parser("export-field", help="export one wavefunction snapshot")
    common(sp, out=False)
    sp.add_argument("--time", type=float, default=0.0)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--out", required=True, help="output base path (.bin/.json)")
    sp.set_defaults(fn=cmd_export_field)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BoundaryContamination, SingularApproach) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
