"""``pauckit`` command line: train, eval, verify, bench.

Exit codes: 0 success, 1 invalid input or configuration, 2 a property check
failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields

from . import __version__, _backend, bench, dataio, losses, metrics, model, optim, verify

EXIT_OK, EXIT_INVALID, EXIT_PROPERTY = 0, 1, 2
COMMANDS = ("train", "eval", "verify", "bench")
CLI_TASKS = ("auc", "opauc", "tpauc")

log = logging.getLogger("pauckit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures (exit 1), keeping 2 for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Everything a command needs, in a JSON-serializable form."""

    command: str
    task: str = "opauc"
    alpha: float = 1.0
    beta: float = 0.3
    kappa: float = 5.0
    omega: float | None = None
    M: float = losses.DEFAULT_M
    k: float = 2.0
    m: float = 100.0
    c1: float = 0.5
    c2: float = 0.5
    nu: float = 0.05
    lambda_: float = 0.05
    epochs: int = 10
    steps: int | None = None
    batch_size: int = 128
    stratified: bool = False
    warmup: int = 0
    model: str = "linear"
    hidden: int = 16
    csv: str | None = None
    test_csv: str | None = None
    label_column: str = "-1"
    minmax: bool = False
    synthetic: str | None = None
    stream: int = 1
    seed: int = 0
    kernel: str = "auto"
    check_step_conditions: bool = False
    trace: str = "trace.csv"
    checkpoint: str = "model.json"
    save_config: str | None = None
    metrics_out: str | None = None
    report: str = "verify_report.json"
    only: tuple = ()
    tol: float = 1.0
    bench_out: str = "bench.csv"
    batch_sizes: tuple = bench.BATCH_SIZES
    min_seconds: float = 0.05
    rounds: int = 5
    no_pairwise: bool = False

    def to_json(self):
        d = asdict(self)
        d["only"], d["batch_sizes"] = list(self.only), list(self.batch_sizes)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        d["only"], d["batch_sizes"] = tuple(d["only"]), tuple(d["batch_sizes"])
        return cls(**d)

    @classmethod
    def from_args(cls, ns):
        names = {f.name for f in fields(cls)}
        d = {k: v for k, v in vars(ns).items() if k in names and v is not None}
        for key in ("only", "batch_sizes"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def hyper(self, prior_p=0.5):
        task, beta = ("opauc", 1.0) if self.task == "auc" else (self.task, self.beta)
        return losses.HyperParams(task=task, beta=beta, alpha=self.alpha, kappa=self.kappa,
                                  omega=self.omega, prior_p=prior_p, M=self.M)

    def learn(self, T=0):
        return optim.LearnParams(k=self.k, m=self.m, c1=self.c1, c2=self.c2, nu=self.nu,
                                 lambda_=self.lambda_, T=T)

    def kernel_name(self):
        return None if self.kernel == "auto" else self.kernel


# -- argument parsing -----------------------------------------------------------

def _positive_float(text):
    v = float(text)
    if not v > 0 or math.isinf(v):
        raise argparse.ArgumentTypeError(f"must be a finite positive number, got {text}")
    return v


def _fraction(text):
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _count(lo):
    def parse(text):
        v = int(text)
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be an integer >= {lo}, got {text}")
        return v
    return parse


def _csv_list(conv):
    def parse(text):
        try:
            return [conv(t) for t in text.split(",") if t]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _add_problem_flags(p):
    g = p.add_argument_group("problem")
    g.add_argument("--task", choices=CLI_TASKS, default="opauc",
                   help="metric to optimize; auc is opauc with beta=1 (default: opauc)")
    g.add_argument("--alpha", type=_fraction, default=1.0,
                   help="TPR lower bound 1-alpha: bottom alpha of positives, range (0, 1] (default: 1.0)")
    g.add_argument("--beta", type=_fraction, default=0.3,
                   help="FPR upper bound: top beta of negatives, range (0, 1] (default: 0.3)")


def _add_data_flags(p):
    g = p.add_argument_group("data (one of --synthetic / --csv)")
    g.add_argument("--synthetic", metavar="NPOS:NNEG:DIM:SEP",
                   help="two-Gaussian data; counts >= 1, dim >= 1, separation >= 0")
    g.add_argument("--stream", type=_count(0), default=None,
                   help="synthetic draw index >= 0; train uses 0 for training and 1 for the "
                        "held-out set, eval defaults to 1")
    g.add_argument("--csv", help="CSV file with a binary 0/1 label column")
    g.add_argument("--test-csv", help="held-out CSV with the same columns (train only)")
    g.add_argument("--label-column", default="-1",
                   help="label column name or integer index, negative counts from the end (default: -1)")
    g.add_argument("--minmax", action="store_true",
                   help="scale features to [0, 1] per column (train: with training ranges)")
    g.add_argument("--seed", type=_count(0), default=0,
                   help="integer >= 0 seeding data, initialization and shuffling (default: 0)")


def _add_train_flags(p):
    g = p.add_argument_group("smoothing")
    g.add_argument("--kappa", type=_positive_float, default=5.0,
                   help="softplus sharpness, > 0 (default: 5)")
    g.add_argument("--omega", type=_nonneg_float, default=None,
                   help="extra concavity weight on gamma, >= 0 and kappa <= 2+2*omega "
                        "(default: 0.5*kappa*(1/beta [+ 1/alpha for tpauc]) - 1, floored at 0)")
    g.add_argument("--M", type=_positive_float, default=losses.DEFAULT_M,
                   help="multiplier upper bound, > 0 (default: 1e9)")

    g = p.add_argument_group("optimizer")
    g.add_argument("--k", type=_positive_float, default=2.0,
                   help="step scale in eta_t = k/(m+t)^(1/3), > 0 with k^3 <= m (default: 2)")
    g.add_argument("--m", type=_positive_float, default=100.0, help="step offset, >= max(1, k^3) (default: 100)")
    g.add_argument("--c1", type=_nonneg_float, default=0.5,
                   help="momentum constant for the descent estimate, >= 0; rho = c1*eta^2 capped at 1 (default: 0.5)")
    g.add_argument("--c2", type=_nonneg_float, default=0.5,
                   help="momentum constant for the ascent estimate, >= 0; xi = c2*eta^2 capped at 1 (default: 0.5)")
    g.add_argument("--nu", type=_positive_float, default=0.05, help="descent step, > 0 (default: 0.05)")
    g.add_argument("--lambda", dest="lambda_", type=_positive_float, default=0.05,
                   help="ascent step, > 0 (default: 0.05)")
    g.add_argument("--epochs", type=_count(0), default=10, help="passes over the data, >= 0 (default: 10)")
    g.add_argument("--steps", type=_count(0), default=None,
                   help="total iterations T >= 0; overrides --epochs")
    g.add_argument("--batch-size", type=_count(1), default=128,
                   help="mini-batch size, 1 .. dataset size (default: 128)")
    g.add_argument("--stratified", action="store_true", help="keep the class ratio in every batch")
    g.add_argument("--warmup", type=_count(0), default=0,
                   help="cross-entropy SGD epochs before training, >= 0 (default: 0, off)")
    g.add_argument("--check-steps", action="store_true",
                   help="report violated step-size conditions of the convergence analysis (never blocks)")

    g = p.add_argument_group("model and output")
    g.add_argument("--model", choices=model.KINDS, default="linear", help="score model (default: linear)")
    g.add_argument("--hidden", type=_count(1), default=16, help="mlp1 hidden width, >= 1 (default: 16)")
    g.add_argument("--trace", default="trace.csv", help="trace CSV path (default: trace.csv)")
    g.add_argument("--checkpoint", default="model.json", help="checkpoint path (default: model.json)")
    g.add_argument("--save-config", help="also write the parsed configuration as JSON here")


def _add_kernel_flag(p):
    p.add_argument("--kernel", choices=("auto", "python", "compiled"), default="auto",
                   help="loss kernel; auto picks the compiled one when built (default: auto)")


def build_parser():
    parser = _Parser(prog="pauckit", description="Instance-wise partial AUC optimization.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write trace + checkpoint")
    _add_problem_flags(p)
    _add_data_flags(p)
    _add_train_flags(p)
    _add_kernel_flag(p)

    p = sub.add_parser("eval", help="print metrics of a checkpoint as JSON")
    _add_problem_flags(p)
    _add_data_flags(p)
    p.add_argument("--checkpoint", default="model.json", help="checkpoint to score with (default: model.json)")
    p.add_argument("--metrics-out", help="also write the metrics JSON here")

    p = sub.add_parser("verify", help="run the property suite and write a JSON report")
    p.add_argument("--seed", type=_count(0), default=0, help="integer >= 0 (default: 0)")
    p.add_argument("--only", type=_csv_list(str), default=None,
                   help=f"comma-separated subset of: {', '.join(verify.CHECKS)}")
    p.add_argument("--tol", type=_positive_float, default=1.0,
                   help="multiplier on every tolerance, > 0 (default: 1)")
    p.add_argument("--report", default="verify_report.json", help="report path (default: verify_report.json)")

    p = sub.add_parser("bench", help="time the instance-wise loss against the pairwise risk")
    _add_problem_flags(p)
    p.add_argument("--kappa", type=_positive_float, default=5.0, help="softplus sharpness, > 0 (default: 5)")
    p.add_argument("--seed", type=_count(0), default=0, help="integer >= 0 (default: 0)")
    p.add_argument("--batch-sizes", type=_csv_list(_count(1)), default=list(bench.BATCH_SIZES),
                   help="comma-separated sizes >= 1 (default: 64,...,2048)")
    p.add_argument("--min-seconds", type=_positive_float, default=0.05,
                   help="minimum timing window per round, > 0 (default: 0.05)")
    p.add_argument("--rounds", type=_count(1), default=5, help="timing rounds, >= 1; the median is kept (default: 5)")
    p.add_argument("--no-pairwise", action="store_true", help="skip the pairwise risk")
    p.add_argument("--bench-out", default="bench.csv", help="CSV path (default: bench.csv)")
    _add_kernel_flag(p)
    return parser


# -- commands -------------------------------------------------------------------

def _load(cfg, stream):
    if cfg.synthetic and cfg.csv:
        raise UsageError("give either --synthetic or --csv, not both")
    if cfg.synthetic:
        spec = dataio.parse_synthetic_spec(cfg.synthetic)
        return dataio.generate_synthetic(**spec, seed=cfg.seed, stream=stream)
    if cfg.csv:
        return dataio.load_csv(cfg.csv, _label_column(cfg.label_column))
    raise UsageError("no data: give --synthetic NPOS:NNEG:DIM:SEP or --csv PATH")


def _label_column(text):
    try:
        return int(text)
    except ValueError:
        return text


def _train_and_test(cfg):
    train = _load(cfg, 0)
    if cfg.synthetic:
        test = _load(cfg, 1)
    elif cfg.test_csv:
        test = dataio.load_csv(cfg.test_csv, _label_column(cfg.label_column))
    else:
        test = None
    if cfg.minmax:
        raw = train
        train = dataio.min_max_scale(raw)
        test = dataio.min_max_scale(test, reference=raw) if test is not None else None
    return train, test


def cmd_train(cfg):
    hp = cfg.hyper()
    lp = cfg.learn()
    if cfg.check_step_conditions:
        for msg in optim.check_step_conditions(lp):
            print(f"warning: {msg}", file=sys.stderr)
    train, test = _train_and_test(cfg)
    metrics.region_count(train.n_neg, hp.beta, "beta")
    if hp.is_tpauc:
        metrics.region_count(train.n_pos, hp.alpha, "alpha")
    batch = dataio.BatchSpec(cfg.batch_size, shuffle_seed=cfg.seed, stratified=cfg.stratified)
    T = cfg.steps if cfg.steps is not None else cfg.epochs * math.ceil(train.n / cfg.batch_size)
    if cfg.batch_size > train.n:
        raise UsageError(f"--batch-size {cfg.batch_size} exceeds the {train.n} training rows")

    params = model.init_params(cfg.model, train.dim, hidden=cfg.hidden, seed=cfg.seed)
    if cfg.warmup:
        params = optim.warmup_cross_entropy(train, params, cfg.warmup, cfg.nu, batch)
    result = optim.train(train, params, hp, cfg.learn(T), batch, test=test, kernel=cfg.kernel_name())

    optim.write_trace_csv(result.trace, cfg.trace)
    model.save_checkpoint(result.model, cfg.checkpoint)
    if cfg.save_config:
        with open(cfg.save_config, "w") as fh:
            fh.write(cfg.to_json() + "\n")

    out = {"steps": int(result.state.t), "backend": cfg.kernel_name() or _backend.BACKEND}
    for name, data in (("train", train), ("test", test)):
        if data is None:
            continue
        s = model.forward(result.model, data.features)
        ev = metrics.evaluate(s, data.labels, alpha=hp.alpha, beta=hp.beta)
        out[f"{name}_opauc"] = ev["opauc"]
        out[f"{name}_tpauc"] = ev["tpauc"]
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_eval(cfg):
    params = model.load_checkpoint(cfg.checkpoint)
    data = _load(cfg, cfg.stream)
    if cfg.minmax:
        data = dataio.min_max_scale(data)
    beta = 1.0 if cfg.task == "auc" else cfg.beta
    ev = metrics.evaluate(model.forward(params, data.features), data.labels, alpha=cfg.alpha, beta=beta)
    text = json.dumps(ev, sort_keys=True)
    if cfg.metrics_out:
        with open(cfg.metrics_out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_verify(cfg):
    try:
        results = verify.run_suite(seed=cfg.seed, only=cfg.only or None, tol_scale=cfg.tol)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    report = [r.as_json() for r in results]
    with open(cfg.report, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: max_error={r.max_error:.3g} "
              f"tol={r.tolerance:.3g} instances={r.instances}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


def cmd_bench(cfg):
    hp = cfg.hyper()
    backends = [cfg.kernel] if cfg.kernel != "auto" else None
    if backends and cfg.kernel not in _backend.available():
        raise UsageError(f"kernel {cfg.kernel!r} is not built; available: {_backend.available()}")
    rows = bench.run_bench(cfg.batch_sizes, hp=hp, backends=backends, seed=cfg.seed,
                           min_seconds=cfg.min_seconds, rounds=cfg.rounds, pairwise=not cfg.no_pairwise)
    bench.write_bench_csv(rows, cfg.bench_out)
    for r in rows:
        print(f"{r.method:>18} {r.batch_size:>6} {r.mean_ms:12.5f} ms")
    if len(cfg.batch_sizes) > 1:
        print(json.dumps({f"growth_{k}": v for k, v in bench.growth_ratios(rows).items()}, sort_keys=True))
    return EXIT_OK


HANDLERS = {"train": cmd_train, "eval": cmd_eval, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_args(ns)
        return HANDLERS[ns.command](cfg)
    except (UsageError, ValueError, OSError) as exc:
        print(f"pauckit {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
