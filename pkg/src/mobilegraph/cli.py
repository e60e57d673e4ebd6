"""Command-line experiment runner.

Every CSV starts with a ``# config_sha256=<hash> seed=<seed>`` line.  Outputs
go to ``--out``, else ``run.out`` from the config, else $MOBILEGRAPH_OUT, else
the working directory.
"""
import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import config as cfgmod
from . import studies
from .dynamics import EdgeOracle, evolve
from .errors import ConfigError, InvalidInput, ResourceLimit
from .graph import COMPONENT_CSV_HEADER, component_summary
from .pointprocess import dumps_jsonl, sample_ppp

log = logging.getLogger("mobilegraph")

ENV_OUT = "MOBILEGRAPH_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE = 0, 2, 3


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, cfg, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha256={cfg.sha256()} seed={cfg.seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _dicts_to_csv(path, cfg, dicts):
    header = list(dicts[0]) if dicts else []
    return write_csv(path, cfg, header, [[d[k] for k in header] for d in dicts])


# -- subcommands -------------------------------------------------------------------

def cmd_sample(cfg, out, args):
    s = studies.replica_seed(cfg.seed, 1)
    cloud = sample_ppp(cfg.domain(), cfg.intensity, palm=args.palm,
                       rng=np.random.default_rng(s), origin_mark=cfg.origin_mark, seed=cfg.seed)
    path = os.path.join(out, "cloud.jsonl")
    with open(path, "w") as fh:
        fh.write(dumps_jsonl(cloud))
    log.info("wrote %d vertices to %s", cloud.n, path)
    return [path]


def cmd_evolve(cfg, out, args):
    s = studies.replica_seed(cfg.seed, 1)
    cloud = sample_ppp(cfg.domain(), cfg.intensity, palm=args.palm,
                       rng=np.random.default_rng(s), origin_mark=cfg.origin_mark, seed=cfg.seed)
    orc = EdgeOracle.for_cloud(cloud, cfg.kernel, s)
    snap_path = os.path.join(out, "snapshots.jsonl")
    rows = []
    with open(snap_path, "w") as fh:
        for snap in evolve(cloud, cfg.t_grid(), s):
            fh.write(dumps_jsonl(cloud, positions=snap.pos, time=snap.time))
            rows.append(component_summary(snap, orc))
    comp = write_csv(os.path.join(out, "components.csv"), cfg, COMPONENT_CSV_HEADER, rows)
    return [snap_path, comp]


def cmd_broadcast_scaling(cfg, out, args):
    if cfg.kind != "torus":
        raise ConfigError("broadcast-scaling runs on torus domains")
    res, summary = studies.broadcast_scaling(cfg)
    files = [
        write_csv(os.path.join(out, "broadcast_replicas.csv"), cfg,
                  ["volume", "replica", "N", "T_bc", "T_bc_normalized"],
                  [[r.volume, r.replica, r.n, r.t_bc,
                    r.t_bc / studies.normalizer(r.volume, cfg.log_eps)] for r in res]),
        write_csv(os.path.join(out, "broadcast_traces.csv"), cfg,
                  ["volume", "replica", "time", "informed", "N", "T_bc"],
                  [[r.volume, r.replica, t, k, n, r.t_bc] for r in res for t, k, n in r.trace]),
        _dicts_to_csv(os.path.join(out, "broadcast_summary.csv"), cfg, summary),
    ]
    if not args.no_figures:
        from .plotting import broadcast_figure
        files.append(broadcast_figure(res, summary, os.path.join(out, "broadcast_scaling.png")))
    return files


def cmd_perc_tail(cfg, out, args):
    if cfg.kind != "box":
        raise ConfigError("perc-tail runs on box domains")
    res, grid, surv, fit = studies.perc_tail(cfg)
    trace_rows = []
    for replica, n, t_perc, tr in res:
        for t, oc, gi in zip(tr.times, tr.origin_comp, tr.giant):
            trace_rows.append([replica, float(t), int(oc), int(gi), t_perc])
    fit_d = {k: getattr(fit, k) for k in fit.__dataclass_fields__}
    fit_d["stretched_better"] = int(fit.stretched_better)
    files = [
        write_csv(os.path.join(out, "perc_replicas.csv"), cfg, ["replica", "N", "T_perc_proxy"],
                  [[r[0], r[1], r[2]] for r in res]),
        write_csv(os.path.join(out, "perc_traces.csv"), cfg,
                  ["replica", "time", "origin_comp", "giant", "T_perc_proxy"], trace_rows),
        write_csv(os.path.join(out, "perc_survival.csv"), cfg, ["t", "survival"],
                  [[float(t), float(s)] for t, s in zip(grid, surv)]),
        _dicts_to_csv(os.path.join(out, "perc_fit.csv"), cfg, [fit_d]),
    ]
    if not args.no_figures:
        from .plotting import survival_figure
        files.append(survival_figure(grid, surv, fit, os.path.join(out, "perc_survival.png")))
    return files


def cmd_diagnose(cfg, out, args):
    files = []
    rep = studies.density_study(cfg)
    files.append(write_json(os.path.join(out, "density.json"),
                            {"config_sha256": cfg.sha256(), "seed": cfg.seed, **rep.to_dict()}))
    rows, summary, problems = studies.spread_study(cfg, with_membership=not args.no_membership)
    for p in problems:
        log.error("spread verifier: %s", p)
    files.append(_dicts_to_csv(os.path.join(out, "spread.csv"), cfg, rows))
    files.append(_dicts_to_csv(os.path.join(out, "spread_summary.csv"), cfg, summary))
    crow, fitted_c = studies.connector_study(cfg)
    files.append(_dicts_to_csv(os.path.join(out, "connectors.csv"), cfg, crow))
    files.append(write_csv(os.path.join(out, "connectors_fit.csv"), cfg, ["fitted_C"], [[fitted_c]]))
    if not args.no_figures:
        from .plotting import connector_figure, spread_figure
        files.append(spread_figure(summary, os.path.join(out, "spread.png")))
        files.append(connector_figure(crow, fitted_c, os.path.join(out, "connectors.png")))
    return files


def cmd_convergence(cfg, out, args):
    if cfg.kind != "torus":
        raise ConfigError("convergence runs broadcast on torus domains")
    if not studies.nested(cfg.dt_list):
        log.warning("dt_list grids are not nested; refinement monotonicity is not guaranteed")
    res, monotone, summary = studies.convergence(cfg)
    rows = [[rep, n, dt, t, int(monotone[i])]
            for i, (rep, n, ts) in enumerate(res) for dt, t in zip(cfg.dt_list, ts)]
    files = [
        write_csv(os.path.join(out, "convergence.csv"), cfg,
                  ["replica", "N", "dt", "T_bc", "monotone"], rows),
        _dicts_to_csv(os.path.join(out, "convergence_summary.csv"), cfg, summary),
    ]
    if not monotone.all():
        log.warning("T_bc increased under refinement for %d replicas", int((~monotone).sum()))
    if not args.no_figures:
        from .plotting import convergence_figure
        files.append(convergence_figure(cfg.dt_list, [r[2] for r in res],
                                        os.path.join(out, "convergence.png")))
    return files


COMMANDS = {
    "sample": (cmd_sample, "sample a marked Poisson cloud to JSONL"),
    "evolve": (cmd_evolve, "evolve a cloud over the grid; snapshots JSONL + component CSV"),
    "broadcast-scaling": (cmd_broadcast_scaling, "median broadcast time across torus volumes"),
    "perc-tail": (cmd_perc_tail, "survival curve of the percolation-time proxy with tail fits"),
    "diagnose": (cmd_diagnose, "density, spread-subgraph, connector and membership reports"),
    "convergence": (cmd_convergence, "broadcast time under refined observation grids"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run config")
    common.add_argument("--seed", type=int, help="master seed (u64); overrides run.seed")
    common.add_argument("--replicas", type=int, help="replicas per setting; overrides run.replicas")
    common.add_argument("--workers", type=int, help="worker processes (does not change results)")
    common.add_argument("--out", metavar="DIR", help=f"output directory (default: run.out, ${ENV_OUT}, .)")
    common.add_argument("--set", action="append", default=[], metavar="TABLE.KEY=VALUE",
                        help="override any config key, e.g. --set kernel.gamma=0.85")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(
        prog="mobilegraph", description="Mobile geometric scale-free random graph experiments.",
        epilog=cfgmod.__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=helptext, description=helptext,
                            epilog=cfgmod.__doc__,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        if name in ("sample", "evolve"):
            sp.add_argument("--palm", action="store_true", help="prepend an origin vertex")
        if name == "diagnose":
            sp.add_argument("--no-membership", action="store_true",
                            help="skip the membership experiment")
    return p


def resolve_config(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.validate(cfgmod.RunConfig())
    cfg = cfgmod.apply_assignments(cfg, args.set)
    return cfgmod.override(cfg, seed=args.seed, replicas=args.replicas, workers=args.workers)


def output_dir(args, cfg):
    out = args.out or cfg.out or os.environ.get(ENV_OUT) or "."
    os.makedirs(out, exist_ok=True)
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = output_dir(args, cfg)
        files = COMMANDS[args.command][0](cfg, out, args)
    except (ConfigError, InvalidInput) as exc:
        print(f"mobilegraph: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimit as exc:
        print(f"mobilegraph: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"mobilegraph: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
