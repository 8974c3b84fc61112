"""Command-line interface.

Subcommands ``bounds``, ``transition``, ``search``, ``verify`` and
``aggregate``. Exit codes: 0 success, 1 usage or input error, 2 failed
verification or soundness check.

Options may also come from a ``--config`` file of ``key=value`` lines (keys
are option names with dashes replaced by underscores). Command-line flags take
precedence over the file, which takes precedence over built-in defaults.
"""

import argparse
import datetime
import json
import sys
import time

import numpy as np

from . import adversarial, bounds
from .aggregators import BASELINE_RULES, baseline_aggregate, multikrum
from .exceptions import TheoryViolationError
from .io import append_run_log, atomic_write_text, dumps, format_csv, read_point_cloud

TRANSITION_COLUMNS = (
    "ratio",
    "n",
    "f",
    "m_dagger_real",
    "m_dagger_int",
    "m_dagger_over_n",
    "bracket_low_over_n",
    "bracket_high_over_n",
    "reference",
)

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="random seed (unsigned 64-bit)")
    p.add_argument("--out", default=None, help="output file (default: standard output)")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamps for byte-stable output")
    p.add_argument("--log", default="runs.jsonl", help="append-only JSON-lines run log")
    return p


def build_parser():
    parser = _Parser(prog="multikrum", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", default=None, help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("bounds", parents=[common], help="bound curves over m (Figure 1 data)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--f", type=int, required=True)
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--m-max", type=int, default=None, help="default n - f")

    p = sub.add_parser("transition", parents=[common], help="transition point m-dagger (Figure 2 data)")
    p.add_argument("--ratios", type=_float_list, default=[0.1, 0.01, 0.001])
    p.add_argument("--ns", type=_int_list, default=[1000, 10000, 100000])
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("search", parents=[common], help="empirical lower bound by adversarial search")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--f", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--clip", type=float, default=10.0, help="clip radius in honest diameters")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--jobs", type=int, default=1, help="parallel restarts")

    p = sub.add_parser("verify", parents=[common], help="lemma suites and construction checks")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-n", type=int, default=30)
    p.add_argument("--max-d", type=int, default=5)

    p = sub.add_parser("aggregate", parents=[common], help="aggregate a point cloud JSON file")
    p.add_argument("--input", required=True)
    p.add_argument("--rule", required=True, choices=("krum", "multikrum") + BASELINE_RULES)
    p.add_argument("--f", type=int, default=0)
    p.add_argument("--m", type=int, default=None, help="multikrum only")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=1000)
    return parser


def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return parser.parse_args(argv)
    config = read_config(known.config)
    # Install the file's values as subcommand defaults before parsing, so flags still win.
    command = next((a for a in (argv or sys.argv[1:]) if a in COMMANDS), None)
    if command is None:
        return parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[command]
    known_actions = {a.dest: a for a in subparser._actions}
    unknown = sorted(set(config) - set(known_actions))
    if unknown:
        raise UsageError(f"{known.config}: unknown keys {', '.join(unknown)}")
    defaults = {}
    for key, text in config.items():
        action = known_actions[key]
        try:
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = text.lower() in ("1", "true", "yes")
            else:
                defaults[key] = action.type(text) if action.type else text
        except ValueError:
            raise UsageError(f"{known.config}: bad value for {key!r}: {text!r}") from None
        action.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return []
    atomic_write_text(out, text)
    return [str(out)]


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def cmd_bounds(args):
    report = bounds.summary_table(args.n, args.f)
    m_max = args.n - args.f if args.m_max is None else args.m_max
    if not 1 <= args.m_min <= m_max <= args.n - args.f:
        raise UsageError(f"m range [{args.m_min}, {m_max}] must lie within [1, {args.n - args.f}]")
    header = list(bounds.BOUND_COLUMNS) + ["config_lower"]
    rows = report.rows(range(args.m_min, m_max + 1))
    return EXIT_OK, _emit(format_csv(header, rows), args.out)


def transition_rows(ratios, ns, tol=1e-9):
    reference = 1.0 / bounds.YOUNG_CONSTANT
    for ratio in ratios:
        for n in ns:
            f = round(ratio * n)
            rep = bounds.transition(n, f, tol=tol)
            yield {
                "ratio": ratio,
                "n": n,
                "f": f,
                "m_dagger_real": rep.m_dagger_real,
                "m_dagger_int": rep.m_dagger_int,
                "m_dagger_over_n": rep.m_dagger_real / n,
                "bracket_low_over_n": rep.bracket_low / n,
                "bracket_high_over_n": rep.bracket_high / n,
                "reference": reference,
            }


def cmd_transition(args):
    rows = list(transition_rows(args.ratios, args.ns, args.tol))
    outputs = _emit(format_csv(TRANSITION_COLUMNS, rows), args.out)
    outside = [
        row for row in rows
        if not row["bracket_low_over_n"] <= row["m_dagger_over_n"] <= row["bracket_high_over_n"]
    ]
    for row in outside:
        print(f"transition outside analytic bracket: {row}", file=sys.stderr)
    return (EXIT_VERIFY if outside else EXIT_OK), outputs


def cmd_search(args):
    config = adversarial.SearchConfig(
        n=args.n, f=args.f, m=args.m, d=args.d, restarts=args.restarts,
        iterations=args.iterations, step=args.step, seed=args.seed or 0,
        clip=args.clip, epsilon=args.epsilon,
    )
    status = EXIT_OK
    try:
        result = adversarial.search_lower_bound(config, n_jobs=args.jobs)
    except TheoryViolationError as exc:
        print(f"SOUNDNESS FAILURE: {exc}", file=sys.stderr)
        result, status = exc.result, EXIT_VERIFY
    payload = result.to_dict()
    if not args.no_timestamp:
        payload["timestamp"] = _timestamp()
    outputs = _emit(dumps(payload), args.out)
    stream = sys.stderr if args.out is None else sys.stdout
    print(f"best_ratio {result.best_ratio!r}", file=stream)
    print(f"upper_bound {result.upper_bound!r}", file=stream)
    return status, outputs


def verification_checks(trials, seed, max_n=30, max_d=5):
    """Run every executable check; returns ``(lines, ok)``."""
    lines, ok = [], True
    report = adversarial.verify_lemmas(trials, seed, max_n, max_d)
    lines.extend(report.lines())
    lines.append(f"{report.suites_passed()}/{len(adversarial.LEMMA_CHECKS)} lemma suites passed")
    ok &= report.ok

    checks = [
        adversarial.check_krum_constructions(),
        adversarial.check_three_cluster_constructions(),
        *adversarial.check_spot_constructions(),
        adversarial.check_bound_ordering(),
    ]

    worst = 0.0
    for n in range(4, 31):
        for f in range(1, (n - 1) // 3 + 1):
            for m in range(1, n - 2 * f + 1):
                cmp = adversarial.appendix_comparison(n, f, m)
                err = abs(cmp.printed - cmp.configuration) / cmp.configuration
                worst = max(worst, err)
    checks.append(adversarial.Check(
        "closed-form R vs configuration for m <= n-2f, n <= 30", worst <= 1e-12,
        f"worst relative error {worst:.2e}",
    ))
    for check in checks:
        lines.append(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}")
        ok &= check.passed

    cmp = adversarial.appendix_comparison(7, 2, 5)
    reproduced = abs(cmp.printed - 128 / 75) <= 1e-12 and abs(cmp.configuration - 8 / 3) <= 1e-6 * 8 / 3
    lines.append(
        f"NOTE known inconsistency: closed-form R(7, 2, 5) = {cmp.printed:.6f} but its own "
        f"configuration gives {cmp.configuration:.6f} (limit {cmp.limit:.6f}); "
        "the closed form is only trusted for m <= n-2f"
    )
    if not reproduced:
        lines.append("FAIL expected discrepancy 128/75 vs 8/3 was not reproduced")
        ok = False
    return lines, ok


def cmd_verify(args):
    seed = 7 if args.seed is None else args.seed
    lines, ok = verification_checks(args.trials, seed, args.max_n, args.max_d)
    outputs = _emit("\n".join(lines) + "\n", args.out)
    return (EXIT_OK if ok else EXIT_VERIFY), outputs


def cmd_aggregate(args):
    cloud = read_point_cloud(args.input)
    X = cloud.points
    m = None
    selected = []
    if args.rule in ("krum", "multikrum"):
        m = 1 if args.rule == "krum" else (cloud.n if args.m is None else args.m)
        result = multikrum(X, args.f, m)
        selected, aggregate = result.selected.tolist(), result.aggregate
    else:
        aggregate = baseline_aggregate(X, args.rule, f=args.f, tol=args.tol, max_iter=args.max_iter)
    record = {
        "rule": args.rule,
        "f": args.f,
        "m": m,
        "selected": selected,
        "aggregate": np.asarray(aggregate).tolist(),
    }
    return EXIT_OK, _emit(json.dumps(record) + "\n", args.out)


COMMANDS = {
    "bounds": cmd_bounds,
    "transition": cmd_transition,
    "search": cmd_search,
    "verify": cmd_verify,
    "aggregate": cmd_aggregate,
}

_STATUS = {EXIT_OK: "ok", EXIT_USAGE: "error", EXIT_VERIFY: "verification-failure"}


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help and on bad flags; report the code instead.
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"multikrum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"multikrum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    started = time.time()
    outputs = []
    try:
        code, outputs = COMMANDS[args.command](args)
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"multikrum {args.command}: error: {exc}", file=sys.stderr)
        code = EXIT_USAGE

    record = {
        "command": args.command,
        "parameters": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("command", "log", "config", "no_timestamp")
        },
        "seed": args.seed,
        "outputs": outputs,
        "status": _STATUS[code],
    }
    if not args.no_timestamp:
        record["timestamp"] = _timestamp()
        record["elapsed_s"] = round(time.time() - started, 3)
    if args.log:
        append_run_log(args.log, record)
    return code


if __name__ == "__main__":
    sys.exit(main())
