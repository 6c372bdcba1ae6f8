"""Command-line interface: ``run``, ``sweep``, ``fbl-check`` and ``selftest``.

Every :class:`SimConfig` and :class:`AreaSpec` field is exposed as a flag
(``--n-pilot``, ``--side-length``, ...) overriding the ``--config`` file.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import logging
import sys

import numpy as np

from .channel import CorruptCorrelation
from .config import AreaSpec, ConfigError, SimConfig
from .fbl import (
    CgfDomainError,
    ExponentUnreachable,
    ScalarChannelPoint,
    epsilon_normal,
    epsilon_rcus_mc,
    epsilon_saddlepoint,
    optimize_s,
)
from .io import dumps, run_payload, write_json, write_sweep_csv
from .processing import SolverFailure
from .selftest import run_selftest
from .simulation import SimulationError, network_availability, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (SolverFailure, CorruptCorrelation, FloatingPointError, ExponentUnreachable,
                  CgfDomainError, np.linalg.LinAlgError)

log = logging.getLogger("cellfree_urllc")


def _parse_bool(text):
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _config_fields():
    for cls in (SimConfig, AreaSpec):
        for f in dataclasses.fields(cls):
            if f.name != "area":
                yield f


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file with SimConfig keys")
    g = p.add_argument_group("configuration overrides")
    for f in _config_fields():
        typ = {"int": int, "float": float, "bool": _parse_bool, "str": str}[
            f.type if isinstance(f.type, str) else f.type.__name__
        ]
        g.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, type=typ, default=None,
                       metavar=f.name.upper())
    p.add_argument("--seed", type=int, default=None, help="master seed (alias of --master-seed)")
    p.add_argument("--workers", type=int, default=1, help="worker processes for placements")
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")


def build_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    area = dict(data.pop("area", {}) or {})
    for f in _config_fields():
        val = getattr(args, "cfg_" + f.name, None)
        if val is not None:
            data[f.name] = val
    if args.seed is not None:
        data["master_seed"] = args.seed
    if area:
        data["area"] = area
    try:
        return SimConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def cmd_run(args):
    cfg = build_config(args)
    res = network_availability(cfg, args.workers)
    payload = run_payload(cfg, res)
    if args.out:
        write_json(payload, args.out)
    else:
        _emit(dumps(payload), None)
    print(
        f"eta_ul={res.eta_ul:.4f} [{res.ci_ul[0]:.4f}, {res.ci_ul[1]:.4f}]  "
        f"eta_dl={res.eta_dl:.4f} [{res.ci_dl[0]:.4f}, {res.ci_dl[1]:.4f}]  "
        f"samples={res.samples}  split-half z max={res.split_half_z:.2f}  "
        f"single-fade-dominated near target: UL {res.tail_dominated_ul:.3f} DL {res.tail_dominated_dl:.3f}",
        file=sys.stderr,
    )
    return EXIT_OK


def _complex(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a complex number like 0.9+0.1j, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [x for x in text.split(",") if x]


def cmd_sweep(args):
    cfg = build_config(args)
    Ls = args.L_values or [cfg.L]
    Ms = args.M_values or [cfg.M]
    grid = list(itertools.product(Ls, Ms, args.modes or [cfg.mode], args.schemes or [cfg.scheme]))
    for L, M, mode, scheme in grid:
        cfg.replace(L=L, M=M, mode=mode, scheme=scheme)  # validate before running anything
    rows = sweep(cfg, grid, args.workers)
    write_sweep_csv(rows, args.out or sys.stdout)
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"L={r.L} M={r.M} {r.mode}/{r.scheme}: {r.error}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_fbl_check(args):
    point = ScalarChannelPoint.from_payload(
        args.g, args.ghat, args.sigma2, args.rho, args.n, args.bits
    )
    if args.s is None:
        s, sp = optimize_s(point)
    else:
        s = args.s
        sp = epsilon_saddlepoint(point, s)
    nm = epsilon_normal(point, s)
    rng = np.random.default_rng(args.seed)
    tilt = 0.0 if sp.zeta_used is None or not np.isfinite(sp.zeta_used) else float(min(max(sp.zeta_used, 0.0), 1.0))
    mc = epsilon_rcus_mc(point, s, args.mc_samples, tilt, rng)
    out = {
        "s": s,
        "zeta": sp.zeta_used,
        "saddlepoint": sp.value,
        "log_saddlepoint": sp.log_value,
        "normal": nm.value,
        "mc_is": mc.value,
        "log_mc_is": mc.log_value,
        "mc_rel_stderr": mc.stderr / mc.value if mc.value > 0 else float("nan"),
        "mc_low_ess": mc.flags.get("low_ess", False),
    }
    _emit(dumps(out), args.out)
    return EXIT_OK


def cmd_selftest(args):
    checks = run_selftest(args.seed)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.detail}")
    return EXIT_OK if all(c.ok for c in checks) else EXIT_NUMERIC


def build_parser():
    p = argparse.ArgumentParser(prog="cellfree-urllc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="network availability for one configuration (JSON output)")
    _add_config_flags(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="availability over a grid of (L, M, mode, scheme) (CSV output)")
    _add_config_flags(s)
    s.add_argument("--L-values", dest="L_values", type=_int_list, help="e.g. 4,9,16,25")
    s.add_argument("--M-values", dest="M_values", type=_int_list)
    s.add_argument("--modes", type=_str_list, help="subset of cellfree,cellular,smallcell")
    s.add_argument("--schemes", type=_str_list, help="subset of mmse,mr")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fbl-check", help="saddlepoint vs normal vs MC oracle at one scalar point")
    f.add_argument("--g", type=_complex, default=1.0, help="true effective channel, e.g. 0.9+0.1j")
    f.add_argument("--ghat", type=_complex, default=1.0, help="channel value assumed by the decoder")
    f.add_argument("--sigma2", type=float, default=0.1)
    f.add_argument("--rho", type=float, default=1.0)
    f.add_argument("--n", type=int, default=130)
    f.add_argument("--bits", type=int, default=160)
    f.add_argument("--s", type=float, default=None, help="fixed s (optimized if omitted)")
    f.add_argument("--mc-samples", type=int, default=100_000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", default=None)
    f.set_defaults(func=cmd_fbl_check)

    t = sub.add_parser("selftest", help="fast invariant checks")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_selftest)
    return p


def _is_numeric(exc):
    while exc is not None:
        if isinstance(exc, NUMERIC_ERRORS):
            return True
        exc = exc.__cause__
    return False


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, *NUMERIC_ERRORS) as exc:
        if isinstance(exc, SimulationError) and not _is_numeric(exc) and isinstance(exc.__cause__, ConfigError):
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
