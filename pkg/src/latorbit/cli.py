"""Command-line harness: ``latorbit <subcommand> [options]``.

Exit codes: 0 success, 1 failed verification, 2 usage or precondition
error, 3 numeric failure, 4 resource cap.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import LatorbitError, PreconditionError
from .io import read_matrix, write_csv, write_json


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _floats(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="latorbit", description="Lattice orbit counting and equidistribution experiments.")
    p.add_argument("--version", action="version", version=f"latorbit {__version__}")
    p.add_argument("--config", help="JSON file of option defaults; flags override it")
    p.add_argument("--threads", type=int, default=None, help="worker count (accepted; kernels run single threaded)")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("enumerate", help="list SL(n,Z) matrices in a norm ball")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--out", default="-")

    s = sub.add_parser("series", help="truncated norm series with tail bound")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--N", type=float, required=True)
    s.add_argument("--g1", default="id")
    s.add_argument("--g2", default="id")
    s.add_argument("--out", default="-")

    s = sub.add_parser("volume", help="skew-ball volume against its main term")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--g1", default="id")
    s.add_argument("--g2", default="id")
    s.add_argument("--N", type=float, default=40.0)
    s.add_argument("--mc", nargs=2, type=int, metavar=("SAMPLES", "SEED"))
    s.add_argument("--split", type=_floats, help="eps1,eps2 for the three-range split")
    s.add_argument("--out", help="per-q CSV")
    s.add_argument("--summary", default="-", help="summary JSON")

    s = sub.add_parser("orbit", help="orbit records of the base point")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--x0", default="base", help="'base' or a file with the m x (m+1) basis then w")
    s.add_argument("--out", default="-")

    s = sub.add_parser("measure-compare", help="empirical orbit measure against the limit sampler")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--mc", type=int, default=100_000)
    s.add_argument("--seed", type=int)
    s.add_argument("--report", default="-")

    s = sub.add_parser("rep-check", help="expansion of SL(2) copies in a representation")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--rep", choices=["standard", "adjoint"], default="adjoint")
    s.add_argument("--chi", type=float, default=0.5)
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--tlist", type=_floats, default=[1e-1, 1e-2, 1e-3])
    s.add_argument("--trials", type=int, default=2000)
    s.add_argument("--seed", type=int)
    s.add_argument("--g0", default="id")
    s.add_argument("--out", default="-")

    s = sub.add_parser("unfold-check", help="unfolding identity and mass invariance (m = 2)")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--center", default="id", help="matrix g; the bump sits at g g^T")
    s.add_argument("--g0", default="id", help="second g0 for the mass comparison")
    s.add_argument("--out", default="-")

    s = sub.add_parser("verify", help="run the acceptance suite")
    s.add_argument("suite", choices=["fast", "full"])
    s.add_argument("--json", dest="json_out")
    return p


def _config_tokens(cfg: dict, given: set) -> list:
    out = []
    for k, v in cfg.items():
        if k.replace("_", "-") in given or v is None:
            continue
        flag = "--" + k.replace("_", "-")
        if isinstance(v, list) and k == "mc":
            out += [flag] + [str(x) for x in v]
        elif isinstance(v, list):
            out += [flag, ",".join(str(x) for x in v)]
        else:
            out += [flag, str(v)]
    return out


def _apply_config(parser, argv):
    """Parse ``argv`` with values from ``--config`` filling in absent flags."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {known.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config file must hold a JSON object")
        pos = next((i for i, a in enumerate(argv) if a in COMMANDS), None)
        if pos is not None:
            given = {a[2:].split("=")[0] for a in argv if a.startswith("--")}
            argv = argv[: pos + 1] + _config_tokens(cfg, given) + argv[pos + 1:]
    return parser.parse_args(argv)


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("config",)}


def _need_seed(args):
    if args.seed is None:
        raise PreconditionError(f"{args.cmd} is stochastic and needs --seed")


def cmd_enumerate(args):
    from .enumeration import enumerate_sl

    M = enumerate_sl(args.n, args.T)
    n = args.n
    cols = [f"a{i + 1}{j + 1}" for i in range(n) for j in range(n)] + ["norm2"]
    rows = (list(g.ravel()) + [int((g * g).sum())] for g in M)
    write_csv(args.out, cols, rows, _echo(args))
    return 0


def cmd_series(args):
    from .series import series_sigma

    g1 = read_matrix(args.g1, args.m)
    g2 = read_matrix(args.g2, args.m)
    r = series_sigma(g1, g2, args.sigma, args.N, with_shells=True)
    write_json(args.out, {"value": r.value, "N": r.N, "tail_bound": r.tail_bound,
                          "shells": [{"norm2": k, "sum": v} for k, v in r.shells]}, _echo(args))
    return 0


def cmd_volume(args):
    from . import volume as V

    g1 = read_matrix(args.g1, args.m + 1)
    g2 = read_matrix(args.g2, args.m + 1)
    spec = V.SkewBallSpec(args.m, args.T, g1, g2)
    hv = V.h_volume(spec, args.N, keep_per_q=bool(args.out or args.split))
    mt = V.main_term(spec, args.N)
    summary = {"h_volume": hv.value, "main_term": mt, "ratio": abs(hv.value / mt - 1),
               "tail_bound": hv.tail, "components": hv.components}
    if args.out:
        rows = []
        m = args.m
        for q, a, vol in hv.per_q:
            rp = V.roots(spec.with_q(q))
            rows.append(list(q.ravel()) + [a, rp.alpha, rp.beta, vol])
        cols = [f"q{i + 1}{j + 1}" for i in range(m) for j in range(m)] + ["norm", "alpha", "beta", "v_volume"]
        write_csv(args.out, cols, rows, _echo(args))
    if args.split:
        if len(args.split) != 2:
            raise PreconditionError("--split takes eps1,eps2")
        e1, e2 = args.split
        tot = [0.0, 0.0, 0.0]
        skipped = 0
        for q, _, _ in hv.per_q:
            si = V.split_integrals(spec.with_q(q), e1, e2)
            if not si.ordered:
                skipped += 1
                continue
            for i in range(3):
                tot[i] += si.parts[i]
        summary["split"] = {"eps1": e1, "eps2": e2, "ranges": tot, "unordered_components": skipped}
    if args.mc:
        est, se = V.mc_volume(spec, args.mc[0], args.mc[1], args.N)
        summary["mc"] = {"estimate": est, "stderr": se, "samples": args.mc[0], "seed": args.mc[1]}
    write_json(args.summary, summary, _echo(args))
    return 0


def _read_point(spec: str, m: int):
    from .moduli import base_point, make_point

    if spec == "base":
        return base_point(m)
    M = np.loadtxt(spec, ndmin=2)
    if M.shape != (m + 1, m + 1):
        raise PreconditionError("x0 file must hold the m basis rows followed by w")
    return make_point(M[:m], M[m])


def cmd_orbit(args):
    from .moduli import orbit_empirical

    emp = orbit_empirical(_read_point(args.x0, args.m), args.T)
    n = args.m + 1
    m = args.m
    cols = ([f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)] + ["weight"]
            + [f"w{i + 1}" for i in range(n)] + [f"lambda{i + 1}" for i in range(m)]
            + [f"eta{i + 1}{j + 1}" for i in range(m) for j in range(m)])
    rows = (list(emp.gammas[k].ravel()) + [int(emp.weights[k])] + list(emp.w[k]) + list(emp.lambdas[k])
            + list(emp.eta[k].ravel()) for k in range(len(emp.weights)))
    cfg = _echo(args)
    cfg["aggregated"] = emp.aggregated
    write_csv(args.out, cols, rows, cfg)
    return 0


def cmd_measure_compare(args):
    from .limit import compare
    from .moduli import base_point, orbit_empirical

    _need_seed(args)
    if args.m != 2:
        raise PreconditionError("measure-compare is implemented for m = 2")
    x0 = base_point(2)
    emp = orbit_empirical(x0, args.T)
    rep = compare(emp, x0, mc_count=args.mc, seed=args.seed)

    def tc(c):
        return {"name": c.name, "empirical": c.empirical, "empirical_se": c.empirical_se,
                "model": c.model, "model_se": c.model_se, "z": c.z}

    write_json(args.report, {"T": args.T, "records": len(emp.weights), "orbit_size": emp.total,
                             "n_eff": emp.n_eff(), "cap_discrepancy": rep.caps, "cap_sup": rep.cap_sup,
                             "fiber": [tc(c) for c in rep.fiber], "product": [tc(c) for c in rep.product]},
               _echo(args))
    return 0


def cmd_rep_check(args):
    from .sl2 import expansion_check_G

    _need_seed(args)
    g0 = read_matrix(args.g0, args.m + 1)
    rows = expansion_check_G(args.rep, g0, args.tlist, args.chi, args.r, args.trials, args.seed)
    write_csv(args.out, ["t", "radius", "min_sup", "grid"], [[r.t, r.radius, r.min_sup, r.grid] for r in rows],
              _echo(args))
    return 0


def cmd_unfold_check(args):
    from .limit import GramBump, mass_invariance_check, unfolding_check

    _need_seed(args)
    g = read_matrix(args.center, 3)
    f = GramBump(g @ g.T, args.radius)
    u = unfolding_check(f, args.samples, args.seed)
    res = mass_invariance_check([np.eye(3), read_matrix(args.g0, 3)], args.samples, args.seed)
    zm = abs(res[0].mass - res[1].mass) / math.hypot(res[0].se, res[1].se)
    write_json(args.out, {"unfolding": {"lhs": u.lhs, "lhs_se": u.lhs_se, "rhs": u.rhs, "rhs_se": u.rhs_se,
                                        "rhs_full_group": u.rhs_full_group, "z": u.z},
                          "mass": [{"mass": r.mass, "se": r.se} for r in res], "mass_z": zm}, _echo(args))
    return 0


def cmd_verify(args):
    from . import acceptance

    nums = acceptance.FAST if args.suite == "fast" else sorted(acceptance.CRITERIA)
    res = acceptance.run(nums, echo=lambda s: print(s, flush=True))
    if args.json_out:
        write_json(args.json_out, {"suite": args.suite, "criteria": [
            {"number": c.number, "name": c.name, "passed": c.passed, "detail": c.detail, "seconds": c.seconds}
            for c in res]}, _echo(args))
    return 0 if all(c.passed for c in res) else 1


COMMANDS = {
    "enumerate": cmd_enumerate, "series": cmd_series, "volume": cmd_volume, "orbit": cmd_orbit,
    "measure-compare": cmd_measure_compare, "rep-check": cmd_rep_check, "unfold-check": cmd_unfold_check,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = _apply_config(parser, argv)
    try:
        return COMMANDS[args.cmd](args)
    except LatorbitError as exc:
        print(f"latorbit {args.cmd}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # unlabelled precondition failures from argument checks
        print(f"latorbit {args.cmd}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
