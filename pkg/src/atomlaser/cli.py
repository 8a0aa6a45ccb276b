"""Command-line front end.

Every command takes ``--seed``, ``--config FILE`` (plain ``key = value``
lines, ``#`` comments) and ``--format json|csv``.  Explicit flags override
the config file, which overrides built-in defaults.  JSON output echoes the
resolved configuration.

Exit status: 0 success, 2 usage error, 3 numerical failure (diagnostic JSON
on stderr).
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import experiments as ex
from . import jumps, region
from .errors import AtomLaserError, DomainError
from .gaussian import LaserParams, MomentState
from .unraveling import UnravelingMatrix, VARIABLE_NAMES, simulate, write_trajectory_csv


class UsageError(Exception):
    pass


# parameter schema per command: name -> (type, default)
SCHEMA = {
    "region": dict(chi=(float, 0.0), nu=(float, 0.0), gamma_min=(float, 0.01),
                   gamma_max=(float, 1.0), n_gamma=(int, 100), gammas=(str, "")),
    "cc-sweep": dict(vary=(str, "chi"), start=(float, 0.01), stop=(float, 1e4), n=(int, 25),
                     chi=(float, 0.0), nu=(float, 0.0), workers=(int, 1)),
    "qsd-sweep": dict(vary=(str, "chi"), start=(float, 0.01), stop=(float, 1e4), n=(int, 25),
                      chi=(float, 0.0), nu=(float, 0.0), workers=(int, 1)),
    "simulate": dict(chi=(float, 0.0), nu=(float, 0.0), mu=(float, 1.0), dt=(float, 1e-3),
                     n_steps=(int, 1000), save_every=(int, 1), unraveling=(str, "zero"),
                     beta=(float, math.nan), gamma=(float, math.nan),
                     m10=(float, 0.0), m01=(float, 0.0), m20=(float, math.nan),
                     m11=(float, math.nan), m02=(float, math.nan),
                     **{k: (float, 0.0) for k in VARIABLE_NAMES}),
    "jumps": dict(mu=(float, 20.0), t_max=(float, 1e4), n0=(int, 0), burn_in=(float, 20.0)),
    "experiment": dict(spec=(str, ""), factor=(float, ex.DEFAULT_FACTOR)),
}
FORMATS = {"experiment": ("json", "csv", "text")}


def _parse_value(name, typ, raw):
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise UsageError(f"{name}: cannot parse {raw!r} as {typ.__name__}")


def read_config(path: str) -> dict:
    """``key = value`` pairs from a plain text file."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_string("[config]\n" + fh.read())
    except OSError as err:
        raise UsageError(f"cannot read config {path}: {err}")
    except configparser.Error as err:
        raise UsageError(f"malformed config {path}: {err}")
    return dict(cp["config"])


def resolve(command: str, args) -> dict:
    schema = SCHEMA[command]
    cfg = {k: d for k, (_, d) in schema.items()}
    if args.config:
        for k, raw in read_config(args.config).items():
            k = k.replace("-", "_")
            if k == "seed":
                continue
            if k not in schema:
                raise UsageError(f"unknown config key {k!r} for {command}")
            cfg[k] = _parse_value(k, schema[k][0], raw)
    for k in schema:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    seed = args.seed
    if seed is None and args.config:
        raw = read_config(args.config).get("seed")
        seed = _parse_value("seed", int, raw) if raw is not None else None
    cfg["seed"] = 0 if seed is None else seed
    return cfg


def _params(cfg, mu=1.0) -> LaserParams:
    return LaserParams(cfg.get("mu", mu), cfg.get("chi", 0.0), cfg.get("nu", 0.0))


def _sweep_grid(cfg):
    if not (cfg["start"] > 0 and cfg["stop"] > cfg["start"] and cfg["n"] >= 2):
        raise UsageError("sweep needs 0 < start < stop and n >= 2")
    if cfg["vary"] not in ("chi", "nu"):
        raise UsageError("vary must be chi or nu")
    return [float(v) for v in np.geomspace(cfg["start"], cfg["stop"], cfg["n"])]


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dump_json(command, cfg, payload) -> str:
    doc = dict(command=command, config=_clean(cfg), **_clean(payload))
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _csv(header, rows) -> str:
    out = [",".join(header)]
    for r in rows:
        out.append(",".join("" if v is None else (repr(float(v)) if isinstance(v, float) else str(v))
                            for v in r))
    return "\n".join(out) + "\n"


# commands ---------------------------------------------------------------------

def cmd_region(cfg, fmt) -> str:
    p = _params(cfg)
    if cfg["gammas"]:
        try:
            gammas = [float(g) for g in cfg["gammas"].split(",")]
        except ValueError:
            raise UsageError("gammas must be a comma separated list of numbers")
    else:
        if not (0 < cfg["gamma_min"] <= cfg["gamma_max"] <= 1 and cfg["n_gamma"] >= 1):
            raise UsageError("need 0 < gamma_min <= gamma_max <= 1 and n_gamma >= 1")
        gammas = [float(g) for g in np.linspace(cfg["gamma_min"], cfg["gamma_max"], cfg["n_gamma"])]
    if any(not 0 < g <= 1 for g in gammas):
        raise UsageError("every gamma must lie in (0, 1]")
    rows = region.region_rows(sorted(gammas), p)
    if fmt == "csv":
        buf = io.StringIO()
        region.write_region_csv(rows, buf)
        return buf.getvalue()
    return dump_json("region", cfg, dict(rows=[dict(gamma=g, beta_lo=lo, beta_hi=hi)
                                              for g, lo, hi in rows]))


def _sweep(command, cfg, fmt, fn) -> str:
    xs = _sweep_grid(cfg)

    def one(x):
        kw = dict(chi=cfg["chi"], nu=cfg["nu"])
        kw[cfg["vary"]] = x
        t = fn(LaserParams(1.0, kw["chi"], kw["nu"]))
        return (x, t.alpha, t.beta, t.gamma)

    with ThreadPoolExecutor(max_workers=max(1, cfg["workers"])) as pool:
        rows = list(pool.map(one, xs))      # map preserves input order
    if fmt == "csv":
        return _csv(["x", "alpha", "beta", "gamma"], rows)
    kind = "CC" if command == "cc-sweep" else "QSD"
    return dump_json(command, cfg, dict(kind=kind, rows=[dict(x=x, alpha=a, beta=b, gamma=g)
                                                        for x, a, b, g in rows]))


def cmd_cc_sweep(cfg, fmt) -> str:
    return _sweep("cc-sweep", cfg, fmt, region.cc_ensemble)


def cmd_qsd_sweep(cfg, fmt) -> str:
    return _sweep("qsd-sweep", cfg, fmt, region.qsd_ensemble)


def _unraveling(cfg, p):
    kind = cfg["unraveling"]
    if kind == "zero":
        return UnravelingMatrix.zero()
    if kind == "explicit":
        return UnravelingMatrix.from_vector([cfg[k] for k in VARIABLE_NAMES])
    if kind == "min-norm":
        if math.isnan(cfg["beta"]) or math.isnan(cfg["gamma"]):
            raise UsageError("unraveling=min-norm needs beta and gamma")
        res = region.solve_min_norm(region.PRQuery(cfg["beta"], cfg["gamma"], p))
        return res.u_star
    raise UsageError("unraveling must be zero, explicit or min-norm")


def cmd_simulate(cfg, fmt) -> str:
    p = _params(cfg)
    if cfg["dt"] <= 0 or cfg["n_steps"] < 1 or cfg["save_every"] < 1:
        raise UsageError("need dt > 0, n_steps >= 1, save_every >= 1")
    u = _unraveling(cfg, p)
    m20, m11, m02 = cfg["m20"], cfg["m11"], cfg["m02"]
    if math.isnan(m20):
        if cfg["unraveling"] == "min-norm":
            g, b = cfg["gamma"], cfg["beta"]
            m20, m11, m02 = g, b, (1 + b * b) / g
        else:
            m20, m11, m02 = 1.0, 0.0, 1.0
    if math.isnan(m11) or math.isnan(m02):
        raise UsageError("give all of m20, m11, m02 or none")
    init = MomentState(cfg["m10"], cfg["m01"], m20, m11, m02)
    traj = simulate(u, p, init, cfg["dt"], cfg["n_steps"], cfg["seed"], save_every=cfg["save_every"])
    if fmt == "csv":
        buf = io.StringIO()
        write_trajectory_csv(traj, buf)
        return buf.getvalue()
    names = ["t", "m10", "m01", "m20", "m11", "m02"]
    return dump_json("simulate", cfg, dict(
        unraveling=dict(zip(VARIABLE_NAMES, u.to_vector().tolist())),
        rows=[dict(zip(names, map(float, r))) for r in traj.rows()]))


def cmd_jumps(cfg, fmt) -> str:
    if not (cfg["mu"] > 0 and cfg["t_max"] > cfg["burn_in"] >= 0 and cfg["n0"] >= 0):
        raise UsageError("need mu > 0, n0 >= 0 and 0 <= burn_in < t_max")
    tr = jumps.gillespie(cfg["n0"], cfg["mu"], cfg["t_max"], cfg["seed"])
    h = jumps.occupation_histogram(tr, cfg["burn_in"])
    ref = jumps.poisson_pmf(cfg["mu"], len(h) - 1)
    if fmt == "csv":
        buf = io.StringIO()
        jumps.write_histogram_csv(h, cfg["mu"], buf)
        return buf.getvalue()
    mean, fano = jumps.histogram_stats(h)
    return dump_json("jumps", cfg, dict(
        summary=dict(events=int(len(tr.event_times)), mean=mean, fano=fano,
                     tv_to_poisson=jumps.total_variation(h, ref)),
        rows=[dict(n=n, prob_empirical=float(a), prob_poisson=float(b))
              for n, (a, b) in enumerate(zip(h, ref))]))


def read_experiments(path: str) -> list:
    """Experiments from an INI file, one section each.

    Keys: ``species`` or (``mass``, ``a_s``); ``omega_mean`` and
    ``omega_min`` in rad/s (or ``trap_hz`` as comma separated trap
    frequencies in Hz); ``kappa``; ``mu``.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as err:
        raise UsageError(f"cannot read experiment file {path}: {err}")
    except configparser.Error as err:
        raise UsageError(f"malformed experiment file {path}: {err}")
    out = []
    for name in cp.sections():
        s = cp[name]
        try:
            if "species" in s:
                c = ex.load_species()[s["species"]]
                mass, a_s = c["mass"], c["a_s"]
            else:
                mass, a_s = float(s["mass"]), float(s["a_s"])
            if "trap_hz" in s:
                f = [float(v) for v in s["trap_hz"].split(",")]
                w_mean = 2 * math.pi * float(np.prod(f)) ** (1 / len(f))
                w_min = 2 * math.pi * min(f)
            else:
                w_mean, w_min = float(s["omega_mean"]), float(s["omega_min"])
            out.append(ex.TrapExperiment(mass, w_mean, w_min, a_s, float(s["kappa"]),
                                         float(s["mu"]), label=name))
        except KeyError as err:
            raise UsageError(f"experiment [{name}] missing or unknown key {err}")
        except ValueError as err:
            raise UsageError(f"experiment [{name}]: {err}")
    if not out:
        raise UsageError(f"no experiments in {path}")
    return out


def cmd_experiment(cfg, fmt) -> str:
    exps = read_experiments(cfg["spec"]) if cfg["spec"] else [ex.proposed()]
    reports = [ex.report(e, factor=cfg["factor"]) for e in exps]
    if fmt == "text":
        return ex.table_text(reports)
    if fmt == "csv":
        return ex.table_csv(reports)
    return dump_json("experiment", cfg, dict(reports=[dict(r.__dict__) for r in reports]))


COMMANDS = {"region": cmd_region, "cc-sweep": cmd_cc_sweep, "qsd-sweep": cmd_qsd_sweep,
            "simulate": cmd_simulate, "jumps": cmd_jumps, "experiment": cmd_experiment}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="atomlaser",
                                 description="Realizable ensembles and coherence of a linearized atom laser.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMA.items():
        sp = sub.add_parser(name)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--config", default=None, help="plain key = value file")
        sp.add_argument("--format", choices=FORMATS.get(name, ("json", "csv")), default="csv")
        sp.add_argument("--output", "-o", default=None, help="write here instead of stdout")
        for key, (typ, _) in schema.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = resolve(args.command, args)
        text = COMMANDS[args.command](cfg, args.format)
    except (UsageError, DomainError) as err:
        print(f"atomlaser {args.command}: {err}", file=sys.stderr)
        return 2
    except (AtomLaserError, ArithmeticError, np.linalg.LinAlgError) as err:
        diag = dict(command=args.command, error=type(err).__name__, message=str(err))
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return 3
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
