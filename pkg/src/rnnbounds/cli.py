"""Command-line interface: ``rnnbounds <command> [flags]``.

Exit codes: 0 success, 1 usage or input error, 2 assumption failure under
``--strict``, 3 verification violations.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager

from . import bounds as B
from .audit import audit, check_assumptions
from .cells import CELL_MATRICES
from .data import gen_synthetic
from .errors import FormatError, InvalidInputError, TrainingError
from .experiments import regime_sweep
from .fileio import load_dataset, load_model, save_dataset, save_model
from .reports import (
    SWEEP_COLUMNS,
    assumptions_csv,
    bounds_csv,
    norms_csv,
    verify_csv,
    write_csv,
)
from .train import TrainConfig, train_vanilla
from .verify import (
    VanillaClass,
    estimate_erc_mc,
    verify_conv_orthogonality,
    verify_hidden_norm,
    verify_margin_lipschitz,
    verify_output_lipschitz,
)

EXIT_OK, EXIT_USAGE, EXIT_ASSUMPTION, EXIT_VIOLATION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _query(args, w, data):
    m = args.m if args.m is not None else (data.m if data is not None else None)
    if m is None:
        raise InvalidInputError("sample size unknown: pass --m or --data")
    B_x = args.B_x if args.B_x is not None else (data.B_x if data is not None else 1.0)
    profile = audit(w, B_x=B_x, data=data)
    sigma_h, sigma_y = w.activations["h"], w.activations["y"]
    return B.BoundQuery(profile, t=args.t, m=m, gamma=args.gamma, delta=args.delta,
                        rho_h=sigma_h.rho, rho_y=sigma_y.rho, b=sigma_h.b, B_x=B_x)


def _load(args, need_data=False):
    w = load_model(args.model) if getattr(args, "model", None) else None
    data = load_dataset(args.data) if getattr(args, "data", None) else None
    if need_data and data is None:
        raise InvalidInputError("--data is required")
    return w, data


def cmd_audit(args):
    w, data = _load(args)
    profile = audit(w, B_x=args.B_x, data=data)
    report = check_assumptions(w, data, B_x=args.B_x)
    with _output(args.out) as out:
        norms_csv(profile, out)
        out.write("\n")
        assumptions_csv(report, out)
    if args.strict and not report.passed:
        ids = ", ".join(c.id for c in report.failures())
        print(f"assumption checks failed: {ids}", file=sys.stderr)
        return EXIT_ASSUMPTION
    return EXIT_OK


def _strict_check(args, w, data):
    if args.strict:
        report = check_assumptions(w, data, B_x=args.B_x)
        if not report.passed:
            ids = ", ".join(c.id for c in report.failures())
            print(f"assumption checks failed: {ids}", file=sys.stderr)
            return False
    return True


def cmd_bound(args):
    w, data = _load(args)
    if args.cell is not None and args.cell != w.cell_type:
        raise InvalidInputError(f"--cell {args.cell} does not match model cell type {w.cell_type}")
    if not _strict_check(args, w, data):
        return EXIT_ASSUMPTION
    q = _query(args, w, data)
    if w.cell_type == "vanilla":
        reports = [B.vanilla_erc_bound(q), B.refined_21_bound(q, squared_21=args.squared_21)]
        if q.m >= 2:
            reports.append(B.pacbayes_bound(q))
    elif w.cell_type == "mgu":
        reports = [B.mgu_bound(q)]
    elif w.cell_type == "lstm":
        reports = [B.lstm_bound(q)]
    else:
        reports = [B.conv_bound(q)]
    with _output(args.out) as out:
        bounds_csv(reports, out)
    return EXIT_OK


def cmd_compare(args):
    w, data = _load(args)
    if w.cell_type != "vanilla":
        raise InvalidInputError("compare is defined for vanilla models")
    if not _strict_check(args, w, data):
        return EXIT_ASSUMPTION
    comp = B.comparison_bounds(_query(args, w, data))
    with _output(args.out) as out:
        bounds_csv(comp.reports.values(), out)
    return EXIT_OK


def _model_samplers(w, data):
    def base(rng):
        return w

    if data is None:
        return base, None

    def inputs(rng, _w):
        idx = rng.choice(data.m, size=min(4, data.m), replace=False)
        return data.inputs[idx], data.B_x

    return base, inputs


def cmd_verify(args):
    w, data = _load(args)
    suites = {"hidden", "lipschitz", "margin", "conv"} if args.suite == "all" else {args.suite}
    n, seed = args.trials, args.seed
    reports = []
    if "hidden" in suites:
        reports += [verify_hidden_norm(c, n, seed) for c in CELL_MATRICES]
    if "lipschitz" in suites:
        reports += [verify_output_lipschitz(c, n, seed) for c in CELL_MATRICES]
    if "margin" in suites:
        reports.append(verify_margin_lipschitz(10 * n, seed=seed))
    if "conv" in suites:
        reports += [verify_conv_orthogonality(k, 6, max(1, n // 10), seed) for k in (1, 2, 3)]
    if w is not None and suites & {"hidden", "lipschitz"}:
        base, inputs = _model_samplers(w, data)
        if "hidden" in suites:
            r = verify_hidden_norm(w.cell_type, n, seed, weight_sampler=base, data_sampler=inputs)
            r.kind += "_model"
            reports.append(r)
        if "lipschitz" in suites:
            r = verify_output_lipschitz(w.cell_type, n, seed, base_sampler=base, data_sampler=inputs)
            r.kind += "_model"
            reports.append(r)
    with _output(args.out) as out:
        verify_csv(reports, out)
    return EXIT_VIOLATION if any(r.violations for r in reports) else EXIT_OK


def cmd_erc(args):
    _, data = _load(args, need_data=True)
    t = args.t if args.t is not None else data.T
    cls = VanillaClass(data, args.hidden, t, args.gamma, caps=(args.cap_U, args.cap_V, args.cap_W))
    est = estimate_erc_mc(cls, args.draws, args.candidates, args.seed)
    d_h, d_x, d_y = args.hidden, data.d_x, data.K
    spec = {"U": args.cap_U, "V": args.cap_V, "W": args.cap_W}
    profile = B.NormProfile("vanilla", d_x, d_h, d_y, spec, spec, spec, B_x=data.B_x)
    bound = B.vanilla_erc_bound(B.BoundQuery(profile, t=t, m=data.m, gamma=args.gamma))
    rows = [{"estimate": est.estimate, "std_error": est.std_error, "draws": est.rademacher_draws,
             "candidates": est.candidates_per_draw, "seed": est.seed, "vanilla_erc_bound": bound.value}]
    with _output(args.out) as out:
        write_csv(rows, ("estimate", "std_error", "draws", "candidates", "seed", "vanilla_erc_bound"), out)
    return EXIT_OK


def cmd_gen_data(args):
    data = gen_synthetic(args.m, args.T, args.d_x, args.K, rule=args.rule, seed=args.seed,
                         B_x=args.B_x if args.B_x is not None else 1.0)
    if args.out is None:
        raise InvalidInputError("--out is required")
    save_dataset(data, args.out)
    return EXIT_OK


def cmd_train(args):
    _, data = _load(args, need_data=True)
    if args.out is None:
        raise InvalidInputError("--out is required")
    cfg = TrainConfig(lr=args.lr, epochs=args.epochs, batch_size=args.batch_size, gamma=args.gamma,
                      hidden_dim=args.hidden, target_spectral_U=args.target_U, seed=args.seed)
    w, log = train_vanilla(data, cfg)
    save_model(w, args.out)
    if args.log:
        with _output(args.log) as out:
            write_csv(log, ("epoch", "loss", "ramp_risk", "zero_one", "B_U"), out)
    return EXIT_OK


def cmd_regime_sweep(args):
    _, data = _load(args, need_data=True)
    rows = regime_sweep(data, args.norms, gamma=args.gamma, seeds=args.seeds, epochs=args.epochs,
                        hidden_dim=args.hidden, t=args.t, delta=args.delta)
    with _output(args.out) as out:
        write_csv(rows, SWEEP_COLUMNS, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rnnbounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, model=False, data=False):
        if model:
            p.add_argument("--model", required=True, metavar="PATH")
        if data:
            p.add_argument("--data", metavar="PATH")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--seed", type=int, default=0)
        return p

    def bound_flags(p):
        p.add_argument("--gamma", type=float, required=True)
        p.add_argument("--t", type=int, required=True)
        p.add_argument("--m", type=int)
        p.add_argument("--delta", type=float, default=0.05)
        p.add_argument("--B-x", dest="B_x", type=float)
        p.add_argument("--strict", action="store_true")

    p = common(sub.add_parser("audit", help="norms and assumption checks"), model=True, data=True)
    p.add_argument("--B-x", dest="B_x", type=float)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = common(sub.add_parser("bound", help="generalization bounds of a model"), model=True, data=True)
    p.add_argument("--cell", choices=sorted(CELL_MATRICES))
    p.add_argument("--squared-21", action="store_true")
    bound_flags(p)
    p.set_defaults(func=cmd_bound)

    p = common(sub.add_parser("compare", help="the four complexity expressions"), model=True, data=True)
    bound_flags(p)
    p.set_defaults(func=cmd_compare)

    p = common(sub.add_parser("verify", help="randomized inequality checks"), data=True)
    p.add_argument("--model", metavar="PATH")
    p.add_argument("--suite", choices=("all", "hidden", "lipschitz", "margin", "conv"), default="all")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("erc", help="Monte Carlo Rademacher estimate vs bound"), data=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--t", type=int)
    p.add_argument("--hidden", type=int, default=2)
    p.add_argument("--draws", type=int, default=200)
    p.add_argument("--candidates", type=int, default=500)
    for name in ("U", "V", "W"):
        p.add_argument(f"--cap-{name}", dest=f"cap_{name}", type=float, default=1.0)
    p.set_defaults(func=cmd_erc)

    p = common(sub.add_parser("gen-data", help="synthetic labelled sequences"))
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--d-x", dest="d_x", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--rule", choices=("teacher", "running-sign"), default="teacher")
    p.add_argument("--B-x", dest="B_x", type=float)
    p.set_defaults(func=cmd_gen_data)

    p = common(sub.add_parser("train", help="SGD with BPTT on a vanilla RNN"), data=True)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--target-U", dest="target_U", type=float)
    p.add_argument("--log", metavar="PATH")
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("regime-sweep", help="gap vs bound across recurrent norms"), data=True)
    p.add_argument("--norms", type=_floats, default=[0.9, 1.0, 1.1])
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--t", type=int)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--hidden", type=int, default=8)
    p.set_defaults(func=cmd_regime_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, FormatError, OSError, TrainingError) as exc:
        print(f"rnnbounds {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
