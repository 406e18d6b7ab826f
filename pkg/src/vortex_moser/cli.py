"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import _quadrature
from .biot_savart import reconstruct_velocity, velocity_series, verify_local_bound
from .fields import Cylinder, GridField2D, SpaceTimeField, make_cutoff
from .flows import RadialVorticity, advect, make_grid, radial_velocity
from .io import FormatError, is_manifest, read_manifest, read_vmf, write_manifest, write_vmf
from .moser import build_ledger, certify_exp, ve_check
from .riesz import RieszParams, hls_ratio, loglog_slope
from . import serrin

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows):
    out = open(path, "w", newline="") if path and path != "-" else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()


def load_series(path) -> SpaceTimeField:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"{path}: no such file")
    if path.suffix != ".vmf" and is_manifest(path):
        return read_manifest(path)
    return SpaceTimeField.from_slices([0.0], [read_vmf(path)])


def save_series(path, F: SpaceTimeField, prefix):
    path = Path(path)
    if path.suffix == ".vmf" and len(F) == 1:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_vmf(path, F.grid)
    else:
        write_manifest(path, F, prefix)


def _vec(text):
    parts = [float(p) for p in str(text).split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return tuple(parts)


def _floats(text):
    return [float(p) for p in str(text).split(",") if p]


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


# ---------------------------------------------------------------------------
# subcommands


def _radial_spec(a) -> RadialVorticity:
    if a.kind == "rankine":
        return RadialVorticity.rankine(a.omega0, a.core)
    if a.kind == "lamb_oseen":
        return RadialVorticity.lamb_oseen(a.circulation, a.nu, a.time)
    return RadialVorticity.log_example()


def cmd_generate(a) -> int:
    spec = _radial_spec(a)
    grid = make_grid(a.n, a.half_width, a.mask_radius)
    u, w = radial_velocity(spec, grid)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    if a.steps == 0:
        write_vmf(out / "omega.vmf", w)
        write_vmf(out / "u.vmf", u)
    else:
        W = advect(w, a.dt, a.steps, a.record_every, a.order, a.t0)
        write_manifest(out / "omega.manifest", W, "omega")
        write_manifest(out / "u.manifest", velocity_series(W), "u")
    return EXIT_OK


def cmd_reconstruct(a) -> int:
    W = load_series(a.omega)
    save_series(a.out, W.map(reconstruct_velocity), "u")
    return EXIT_OK


def _top_cylinder(F: SpaceTimeField, radius, t_top) -> Cylinder:
    t1 = F.cylinder.t1 if t_top is None else t_top
    return Cylinder.standard(radius, F.grid.origin, t1, F.cylinder.scaling)


def cmd_verify_bound(a) -> int:
    U, W = load_series(a.u), load_series(a.omega)
    Q = _top_cylinder(U, a.radius, a.t_top)
    b = verify_local_bound(U, W, Q, a.sigma, a.mode, a.k, a.epsilon)
    write_csv(a.out, ["t", "sup_lhs", "sup_rhs_potential", "additive_term", "fitted_C"], b.rows())
    if not math.isfinite(b.fitted_C) or (a.C is not None and b.fitted_C > a.C):
        return EXIT_FAIL
    return EXIT_OK


def cmd_ve_check(a) -> int:
    U, W = load_series(a.u), load_series(a.omega)
    outer = _top_cylinder(W, a.outer_radius, a.t_top)
    inner = _top_cylinder(W, a.inner_radius, a.t_top)
    cut = make_cutoff(inner, outer)
    rows, fail = [], False
    for alpha in a.alpha:
        r = ve_check(U, W, cut, alpha, a.navier_stokes)
        rows.append((alpha, r.lhs, r.gradient_term, r.transport, r.time_term, r.fitted_V0))
        fail |= not math.isfinite(r.fitted_V0) or (a.V0 is not None and r.fitted_V0 > a.V0)
    write_csv(a.out, ["alpha", "lhs", "gradient_term", "transport", "time_term", "fitted_V0"], rows)
    return EXIT_FAIL if fail else EXIT_OK


def _ledger(a, U, W):
    return build_ledger(U, W, _top_cylinder(U, a.radius, a.t_top), a.epsilon, a.j)


def _zero_like(U: SpaceTimeField) -> SpaceTimeField:
    return U.map(lambda f: f.with_data(np.zeros(f.data.shape[:2])))


def cmd_ledger(a) -> int:
    U, W = load_series(a.u), load_series(a.omega)
    L = _ledger(a, U, W)
    write_csv(a.out, ["k", "r_k", "q_k", "u_norm", "omega_norm", "fitted_constant"], L.csv_rows())
    return EXIT_OK


def _write_text(path, text):
    if path and path != "-":
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_certify(a) -> int:
    U = load_series(a.u)
    W = load_series(a.omega) if a.omega else _zero_like(U)
    L = _ledger(a, U, W)
    refined = load_series(a.refined_u) if a.refined_u else None
    cert = certify_exp(U, L, a.C1, refined)
    _write_text(a.out, cert.report())
    return EXIT_OK if cert.verdict == "certified" else EXIT_FAIL


def cmd_hls(a) -> int:
    grid = make_grid(a.n, a.half_width, a.source_radius)
    f = grid.with_data(grid.inside().astype(float))
    if a.s_values:
        params = [RieszParams.from_s(s, a.beta) for s in a.s_values]
    else:
        params = [RieszParams.from_q(q, a.beta) for q in a.q_values]
    reps = [hls_ratio(f, p, window_factor=a.window_factor) for p in params]
    rows = [(r.params.q, r.params.s, r.ratio, r.potential_norm, r.source_norm, r.tail_fraction) for r in reps]
    write_csv(a.out, ["q", "s", "ratio", "potential_norm", "source_norm", "tail_fraction"], rows)
    if len(reps) > 1 and a.s_values:
        sys.stderr.write(f"loglog_slope {fmt(loglog_slope([r.params.s for r in reps], [r.ratio for r in reps]))}\n")
    return EXIT_OK


def cmd_serrin(a) -> int:
    if a.sweep:
        rows = serrin.equivalence_sweep(a.d, exhaustive=True)
        agree = all(f == s for _, _, f, s in rows)
        write_csv(a.out, ["q", "s", "feasible", "serrin_ok"], rows)
        print(f"equivalence={'true' if agree else 'false'}", file=sys.stderr)
        return EXIT_OK if agree else EXIT_FAIL
    ok = serrin.serrin_check(a.d, a.q, a.s)
    print(f"serrin_ok={'true' if ok else 'false'}")
    q, s = serrin.exact(a.q), serrin.exact(a.s)
    if q > 2 and s > 2:
        qs = a.q_star if a.q_star is not None else serrin.dual(q)
        ss = a.s_star if a.s_star is not None else serrin.dual(s)
        rep = serrin.absorption_ok(a.d, q, s, qs, ss)
        width = max(len(n) for n, _ in rep.fields())
        for name, val in rep.fields():
            print(f"{name.ljust(width)}  {val}")
    return EXIT_OK


def demo_dataset(n: int, steps: int = 49, record_every: int = 7, span: float = 0.5):
    """Lamb-Oseen (circulation 1, nu = 0.005, t = 1) on the unit disk, advected over [-span, 0]."""
    grid = make_grid(n, 1.0, 1.0)
    _, w = radial_velocity(RadialVorticity.lamb_oseen(1.0, 0.005, 1.0), grid)
    W = advect(w, span / steps, steps, record_every, t0=-span)
    return velocity_series(W), W


def cmd_demo(a) -> int:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    U, W = demo_dataset(a.n)
    write_manifest(out / "omega.manifest", W, "omega")
    write_manifest(out / "u.manifest", U, "u")
    Q0 = Cylinder.standard(2 * a.radius, U.grid.origin, U.cylinder.t1)
    L = build_ledger(U, W, Q0, a.epsilon, a.j)
    write_csv(out / "ledger.csv", ["k", "r_k", "q_k", "u_norm", "omega_norm", "fitted_constant"], L.csv_rows())
    refined = demo_dataset(2 * a.n)[0] if a.refine else None
    cert = certify_exp(U, L, a.C1, refined)
    (out / "certificate.txt").write_text(cert.report())
    sys.stdout.write(cert.report())
    return EXIT_OK if cert.verdict == "certified" else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortex-moser", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=_positive_int, default=None, help="cap FFT worker threads")
    p.add_argument("--config", default=None, help="key=value file supplying option defaults")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="radial vortex fields as VMF1 files")
    g.add_argument("--kind", choices=["rankine", "lamb_oseen", "log_example"], default="lamb_oseen")
    g.add_argument("--n", type=_positive_int, default=128)
    g.add_argument("--half-width", type=float, default=1.0)
    g.add_argument("--mask-radius", type=float, default=1.0)
    g.add_argument("--omega0", type=float, default=1.0)
    g.add_argument("--core", type=float, default=0.5)
    g.add_argument("--circulation", type=float, default=1.0)
    g.add_argument("--nu", type=float, default=0.005)
    g.add_argument("--time", type=float, default=1.0)
    g.add_argument("--steps", type=int, default=0)
    g.add_argument("--dt", type=float, default=0.01)
    g.add_argument("--record-every", type=_positive_int, default=1)
    g.add_argument("--order", type=int, choices=[1, 3], default=3)
    g.add_argument("--t0", type=float, default=0.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reconstruct", help="velocity from vorticity (zero boundary stream data)")
    r.add_argument("--omega", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    def data_args(sp, omega_required=True):
        sp.add_argument("--u", required=True)
        sp.add_argument("--omega", required=omega_required)
        sp.add_argument("--t-top", type=float, default=None)
        sp.add_argument("--out", default="-")

    v = sub.add_parser("verify-bound", help="local Biot-Savart bound, CSV per slice")
    data_args(v)
    v.add_argument("--radius", type=float, required=True)
    v.add_argument("--sigma", type=float, default=0.5)
    v.add_argument("--mode", choices=["fixed", "mean"], default="fixed")
    v.add_argument("--k", type=_vec, default=(0.0, 0.0))
    v.add_argument("--epsilon", type=float, default=1.0)
    v.add_argument("--C", type=float, default=None, help="fail if fitted_C exceeds this")
    v.set_defaults(func=cmd_verify_bound)

    e = sub.add_parser("ve-check", help="vorticity estimate sides for a smoothstep cutoff")
    data_args(e)
    e.add_argument("--inner-radius", type=float, required=True)
    e.add_argument("--outer-radius", type=float, required=True)
    e.add_argument("--alpha", type=_floats, default=[0.0, 0.5, 0.9])
    e.add_argument("--navier-stokes", action="store_true")
    e.add_argument("--V0", type=float, default=None, help="fail if fitted_V0 exceeds this")
    e.set_defaults(func=cmd_ve_check)

    def ledger_args(sp):
        sp.add_argument("--radius", type=float, default=0.5, help="radius of Q0 = 2Q")
        sp.add_argument("--epsilon", type=float, default=1.0)
        sp.add_argument("--j", type=_positive_int, default=3)

    lg = sub.add_parser("ledger", help="exponent ledger CSV")
    data_args(lg)
    ledger_args(lg)
    lg.set_defaults(func=cmd_ledger)

    c = sub.add_parser("certify", help="exponential integrability certificate")
    data_args(c, omega_required=False)
    ledger_args(c)
    c.add_argument("--C1", type=float, default=1.0)
    c.add_argument("--refined-u", default=None)
    c.set_defaults(func=cmd_certify)

    h = sub.add_parser("hls", help="HLS ratios for a disk indicator")
    h.add_argument("--n", type=_positive_int, default=128)
    h.add_argument("--half-width", type=float, default=1.0)
    h.add_argument("--source-radius", type=float, default=1.0)
    h.add_argument("--beta", type=float, default=1.0)
    h.add_argument("--q-values", type=_floats, default=[1.5])
    h.add_argument("--s-values", type=_floats, default=None)
    h.add_argument("--window-factor", type=float, default=3.0)
    h.add_argument("--out", default="-")
    h.set_defaults(func=cmd_hls)

    s = sub.add_parser("serrin", help="exponent verdicts")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--q", type=serrin.exact, default=None)
    s.add_argument("--s", type=serrin.exact, default=None)
    s.add_argument("--q-star", type=serrin.exact, default=None)
    s.add_argument("--s-star", type=serrin.exact, default=None)
    s.add_argument("--sweep", action="store_true")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_serrin)

    d = sub.add_parser("demo", help="Lamb-Oseen -> ledger -> certificate")
    d.add_argument("--n", type=_positive_int, default=128)
    d.add_argument("--radius", type=float, default=0.25, help="base radius r; Q0 has radius 2r")
    d.add_argument("--epsilon", type=float, default=1.0)
    d.add_argument("--j", type=_positive_int, default=3)
    d.add_argument("--C1", type=float, default=1.0)
    d.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)
    d.add_argument("--out", default="demo_out")
    d.set_defaults(func=cmd_demo)
    return p


def _subparser(parser, name):
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[name]
    raise KeyError(name)


def read_config(path) -> dict[str, str]:
    vals = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        vals[key.strip().replace("-", "_")] = val.strip()
    return vals


def apply_config(parser, command, path):
    """Install config values as defaults of ``command``; command-line flags still win."""
    sp = _subparser(parser, command)
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "func")}
    defaults = {}
    for key, raw in read_config(path).items():
        if key not in actions:
            raise UsageError(f"unknown config key {key!r} for {command}")
        act = actions[key]
        if isinstance(act, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
            val = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                val = act.type(raw) if act.type else raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key}: {exc}") from None
            if act.choices is not None and val not in act.choices:
                raise UsageError(f"config key {key}: {val!r} not in {list(act.choices)}")
        defaults[key] = val
        act.required = False
    sp.set_defaults(**defaults)


def _preparse_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    commands = _subparser_names(parser)
    command = next((tok for tok in argv if tok in commands), None)
    if command is None:
        raise UsageError("--config needs a subcommand")
    if not Path(known.config).exists():
        raise UsageError(f"{known.config}: no such config file")
    apply_config(parser, command, known.config)


def _subparser_names(parser):
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return set(act.choices)
    return set()


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        _preparse_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_USAGE
        if args.threads:
            _quadrature.set_threads(args.threads)
        if args.command == "serrin" and not args.sweep and (args.q is None or args.s is None):
            raise UsageError("serrin needs --q and --s (or --sweep)")
        return args.func(args)
    except (UsageError, FormatError, ValueError, FileNotFoundError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
