"""Command-line front end.

    thermodiff scales   --units natural --temperature 1 --mass 1
    thermodiff rates    --dt 1e-6 --steps 100 --format csv
    thermodiff evolve   --t 1 --grid-points 16384 --grid-span-sigmas 40
    thermodiff sample   --particles 100000 --steps 10 --dt 0.1
    thermodiff estimate --estimator nearest_neighbor --k 4
    thermodiff sweep    --dt-list 1e-2,1e-4,1e-6 --n-list 0,1,10
    thermodiff accept   --output results/

Options can also come from ``--config FILE`` holding ``key=value`` lines
(``#`` starts a comment); explicit flags win over the file.  Artifacts go to
``<output>/<command>.<format>`` when ``--output`` is given and to stdout
otherwise.  Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

import argparse
import json
import os
import sys
import time

from . import acceptance, analytic, ensemble, spectral
from .artifacts import csv_text, json_text, metadata, write_atomic
from .errors import ConstantsOverrideInNaturalUnits, NonPositiveParameter, ThermodiffError
from .units import derive_scales, make_params, validate_timestep

SEED_ENV = "THERMODIFF_SEED"

# Options that control where output goes rather than what is computed.
_NOT_CONFIG = {"output", "config", "command"}
_CONFIG_ALIASES = {"units": "unit_system", "t": "t_list"}


class UsageError(Exception):
    pass


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}; fix: pass e.g. 1e-3")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value:g}; fix: pass a positive value")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value:g}; fix: pass a non-negative value")
    return value


def _int_at_least(minimum):
    def parse(text):
        try:
            value = int(float(text))
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        if value != float(text) or value < minimum:
            raise argparse.ArgumentTypeError(
                f"must be an integer >= {minimum}, got {text}; fix: pass e.g. {max(minimum, 1)}"
            )
        return value

    parse.__name__ = f"int>={minimum}"
    return parse


def _list_of(item_type):
    def parse(text):
        if isinstance(text, (list, tuple)):
            return [item_type(str(v)) for v in text]
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if not parts:
            raise argparse.ArgumentTypeError("empty list; fix: pass comma-separated values, e.g. 1e-2,1e-4")
        return [item_type(p) for p in parts]

    return parse


def _seed(text):
    value = _int_at_least(0)(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _default_seed():
    return os.environ.get(SEED_ENV, str(acceptance.DEFAULT_SEED))


def _physics_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--output", help="directory receiving the artifacts (default: stdout)")
    p.add_argument("--units", dest="unit_system", choices=["natural", "si"], default="natural")
    p.add_argument("--temperature", type=_positive_float, default=1.0)
    p.add_argument("--mass", type=_positive_float, default=1.0)
    p.add_argument("--hbar", type=_positive_float, help="SI only; default CODATA 2018")
    p.add_argument("--boltzmann", type=_positive_float, help="SI only; default CODATA 2018")
    return p


def _format(p, default):
    p.add_argument("--format", choices=["csv", "json"], default=default)


def _sampling(p, dt, steps, particles):
    p.add_argument("--dt", type=_positive_float, default=dt)
    p.add_argument("--steps", type=_int_at_least(1), default=steps)
    p.add_argument("--particles", type=_int_at_least(2), default=particles)
    p.add_argument("--seed", type=_seed, default=_default_seed())
    p.add_argument("--scheme", choices=[s.value for s in ensemble.Scheme], default="full")
    p.add_argument("--workers", type=_int_at_least(1), default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="thermodiff", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _physics_parent()

    p = sub.add_parser("scales", parents=[parent], help="derived scales and exact rate")
    _format(p, "json")
    p.add_argument("--dt", type=_positive_float, help="also report the timestep verdict")

    p = sub.add_parser("variance", parents=[parent], help="variance breakdown over time")
    _format(p, "csv")
    p.add_argument("--t-list", type=_list_of(_nonneg_float), default="0,1,2")

    p = sub.add_parser("rates", parents=[parent], help="analytic rate curves")
    _format(p, "csv")
    p.add_argument("--dt", type=_positive_float, default=1e-3)
    p.add_argument("--steps", type=_int_at_least(1), default=100)

    p = sub.add_parser("evolve", parents=[parent], help="spectral wavepacket validation")
    _format(p, "json")
    p.add_argument("--t", "--t-list", dest="t_list", type=_list_of(_nonneg_float), default="1")
    p.add_argument("--grid-points", type=_int_at_least(16), default=spectral.DEFAULT_POINTS)
    p.add_argument("--grid-span-sigmas", type=_positive_float, default=spectral.CONTAINMENT_SIGMAS)
    p.add_argument("--dump-wavefunction", action="store_true",
                   help="write x,re,im,abs2 at the last time to wavefunction.csv")

    p = sub.add_parser("sample", parents=[parent], help="Monte Carlo ensemble statistics")
    _format(p, "csv")
    _sampling(p, dt=0.1, steps=10, particles=100_000)
    p.add_argument("--dump-ensemble", action="store_true",
                   help="also write every position to ensemble.csv")

    p = sub.add_parser("estimate", parents=[parent], help="entropy rate from an ensemble")
    _format(p, "csv")
    _sampling(p, dt=1e-3, steps=10, particles=100_000)
    p.add_argument("--estimator", choices=[e.value for e in ensemble.Estimator],
                   default="plugin_gaussian")
    p.add_argument("--k", type=_int_at_least(1), default=4)

    p = sub.add_parser("sweep", parents=[parent], help="convergence grid of both rates")
    _format(p, "csv")
    p.add_argument("--dt-list", type=_list_of(_positive_float), default="1e-2,1e-4,1e-6")
    p.add_argument("--n-list", type=_list_of(_int_at_least(0)), default="0,1,10,100")
    p.add_argument("--n-dt-list", type=_list_of(_positive_float),
                   help="extra rows with n = round(n_dt / dt) for every dt")

    p = sub.add_parser("accept", parents=[parent], help="run the acceptance suite")
    p.add_argument("--seed", type=_seed, default=_default_seed())
    p.add_argument("--particles", type=_int_at_least(2), default=acceptance.DEFAULT_PARTICLES)
    return parser


def read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            values[_CONFIG_ALIASES.get(key, key)] = value
    return values


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    return None


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command:
        sub = _subparser(parser, known.command)
        if sub is not None:
            try:
                values = read_config_file(known.config)
            except OSError as exc:
                parser.error(f"--config: cannot read {known.config}: {exc.strerror}")
            except UsageError as exc:
                parser.error(f"--config: {exc}")
            dests = {a.dest for a in sub._actions}
            unknown = sorted(set(values) - dests)
            if unknown:
                parser.error(f"--config: unknown key(s) {', '.join(unknown)} for '{known.command}'")
            sub.set_defaults(**values)
    args = parser.parse_args(argv)
    args._parser = _subparser(parser, args.command)
    return args


def config_of(args):
    """The resolved run configuration, as embedded in artifact metadata."""
    return {
        k: v for k, v in sorted(vars(args).items())
        if not k.startswith("_") and k not in _NOT_CONFIG
    } | {"command": args.command}


def argv_from_config(config):
    """Rebuild an argv that reproduces a run from its embedded config."""
    config = dict(config)
    argv = [config.pop("command")]
    parser = _subparser(build_parser(), argv[0])
    flags = {a.dest: a for a in parser._actions if a.option_strings}
    for key, value in config.items():
        action = flags[key]
        flag = action.option_strings[0]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
            continue
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        argv += [flag, str(value)]
    return argv


def _params(args):
    try:
        return make_params(args.unit_system, args.temperature, args.mass, args.hbar, args.boltzmann)
    except ConstantsOverrideInNaturalUnits as exc:
        args._parser.error(f"--{exc.name}: {exc}; fix: drop --{exc.name} or use --units si")
    except NonPositiveParameter as exc:
        args._parser.error(f"--{exc.name}: {exc}")


# Each command returns (header-or-None, rows-or-payload, extra files).


def cmd_scales(args, scales):
    payload = {
        "dp": scales.dp,
        "dx0": scales.dx0,
        "D": scales.diffusion_const,
        "rate": scales.rate_exact,
        "mass": scales.mass,
        "hbar": scales.hbar,
        "temperature": scales.temperature,
        "boltzmann": scales.boltzmann,
    }
    if args.dt is not None:
        report = validate_timestep(args.params, args.dt)
        payload |= {"dt_threshold": report.threshold, "dt_ratio": report.ratio,
                    "dt_verdict": report.verdict.value}
    return list(payload), [payload], {}


def cmd_variance(args, scales):
    rows = []
    for t in args.t_list:
        b = analytic.variance_total(scales, t)
        rows.append({
            "t": t,
            "quantum_static": b.quantum_static,
            "quantum_drift": b.quantum_drift,
            "classical": b.classical,
            "total": b.total,
            "factored": scales.containment_width(t) ** 2,
        })
    return ["t", "quantum_static", "quantum_drift", "classical", "total", "factored"], rows, {}


def cmd_rates(args, scales):
    exact = analytic.rate_exact(scales).rate
    rows = []
    for n in range(args.steps):
        rows.append({
            "n": n,
            "t": n * args.dt,
            "dt": args.dt,
            "rate_cond": analytic.rate_conditional(scales, n, args.dt).rate,
            # block through step n + 1, the same interval the increment ends at
            "rate_block": analytic.rate_block(scales, n + 1, args.dt).rate,
            "rate_exact": exact,
        })
    return ["n", "t", "dt", "rate_cond", "rate_block", "rate_exact"], rows, {}


def cmd_evolve(args, scales):
    t_max = max(args.t_list)
    grid = spectral.grid_for(scales, t_max, args.grid_points, args.grid_span_sigmas)
    state = spectral.spectral_initialize(scales, grid)
    initial_norm = spectral.grid_moments(state).norm
    rows = []
    for t in sorted(args.t_list):
        state = spectral.spectral_evolve(state, t)
        m = spectral.grid_moments(state)
        target = analytic.variance_quantum(scales, t)
        psi = spectral.psi_closed_form(scales, grid.centers, t)
        rows.append({
            "t": t,
            "norm": m.norm,
            "norm_drift": abs(m.norm - initial_norm),
            "mean": m.mean,
            "variance": m.variance,
            "variance_analytic": target,
            "rel_error": abs(m.variance - target) / target,
            "max_psi_error": float(abs(state.amplitudes - psi).max()),
        })
    extra = {}
    if args.dump_wavefunction:
        amp = state.amplitudes
        wave = [
            {"x": x, "re": a.real, "im": a.imag, "abs2": abs(a) ** 2}
            for x, a in zip(grid.centers.tolist(), amp.tolist())
        ]
        extra["wavefunction.csv"] = (["x", "re", "im", "abs2"], wave)
    header = ["t", "norm", "norm_drift", "mean", "variance", "variance_analytic",
              "rel_error", "max_psi_error"]
    return header, rows, extra


def _ensemble(args, scales):
    return ensemble.sample_trajectories(
        scales, args.dt, args.steps, args.particles, args.seed, args.scheme, args.workers
    )


def cmd_sample(args, scales):
    ens = _ensemble(args, scales)
    stats = ensemble.ensemble_stats(ens)
    rows = [
        {"step": i, "t": t, "mean": m, "var": v, "se": se, "var_analytic": va}
        for i, (t, m, v, se, va) in enumerate(
            zip(stats.t.tolist(), stats.mean.tolist(), stats.var.tolist(),
                stats.se.tolist(), stats.var_analytic.tolist())
        )
    ]
    extra = {}
    if args.dump_ensemble:
        times = ens.times.tolist()
        dump = [
            {"particle": i, "step": j, "t": times[j], "x": x}
            for i, path in enumerate(ens.positions.tolist())
            for j, x in enumerate(path)
        ]
        extra["ensemble.csv"] = (["particle", "step", "t", "x"], dump)
    return ["step", "t", "mean", "var", "se", "var_analytic"], rows, extra


def cmd_estimate(args, scales):
    ens = _ensemble(args, scales)
    points = ensemble.rate_from_ensemble(ens, args.estimator, args.k)
    exact = analytic.rate_exact(scales).rate
    rows = [
        {
            "step": p.n,
            "t": p.n * p.dt,
            "rate": p.rate,
            "se": p.se,
            "rate_cond_analytic": analytic.rate_conditional(scales, p.n, p.dt).rate
            if args.scheme == "full" else None,
            "rate_exact": exact,
        }
        for p in points
    ]
    return ["step", "t", "rate", "se", "rate_cond_analytic", "rate_exact"], rows, {}


SWEEP_COLUMNS = ["n", "dt", "n_dt", "rate_cond", "rate_block", "rate_exact",
                 "gap_cond", "gap_block", "error"]


def sweep_rows(scales, dts, ns, n_dts=()):
    exact = analytic.rate_exact(scales).rate
    cells = [(n, dt) for dt in dts for n in ns]
    cells += [(round(nd / dt), dt) for nd in n_dts for dt in dts]
    rows = []
    for n, dt in cells:
        row = {"n": n, "dt": dt, "n_dt": n * dt, "rate_exact": exact}
        errors = []
        for key, fn in (("cond", analytic.rate_conditional), ("block", analytic.rate_block)):
            try:
                rate = fn(scales, n, dt).rate
            except ThermodiffError as exc:
                errors.append(f"{key}:{type(exc).__name__}")
                continue
            row[f"rate_{key}"] = rate
            row[f"gap_{key}"] = exact - rate
        row["error"] = ";".join(errors) or None
        rows.append(row)
    return rows


def sweep_diagnostics(rows):
    """Monotonicity and small-dt scaling checks over a sweep table."""
    by_dt = {}
    for r in rows:
        if r.get("rate_cond") is not None:
            by_dt.setdefault(r["dt"], {})[r["n"]] = r["rate_cond"]
    cond_decreasing = all(
        all(a > b for a, b in zip(vals, vals[1:]))
        for vals in ([v for _, v in sorted(d.items())] for d in by_dt.values())
    )
    block = sorted({(r["n_dt"], r["rate_block"]) for r in rows if r.get("rate_block") is not None})
    block_decreasing = all(
        b1 > b2 for (x1, b1), (x2, b2) in zip(block, block[1:]) if x2 > x1
    )
    n0 = sorted((r["dt"], r["gap_cond"]) for r in rows if r["n"] == 0 and r.get("gap_cond") is not None)
    return {
        "rate_cond_decreasing_in_n": cond_decreasing,
        "rate_block_decreasing_in_n_dt": block_decreasing,
        "gap_cond_over_dt_at_n0": {repr(dt): gap / dt for dt, gap in n0},
        "max_rate": max(
            [r[k] for r in rows for k in ("rate_cond", "rate_block") if r.get(k) is not None],
            default=None,
        ),
    }


def cmd_sweep(args, scales):
    rows = sweep_rows(scales, args.dt_list, args.n_list, args.n_dt_list or ())
    return SWEEP_COLUMNS, rows, {"sweep_diagnostics.json": sweep_diagnostics(rows)}


COMMANDS = {
    "scales": cmd_scales,
    "variance": cmd_variance,
    "rates": cmd_rates,
    "evolve": cmd_evolve,
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
}


def _emit(args, meta, header, rows, extra):
    if args.format == "csv":
        main_text = csv_text(header, rows, meta)
    else:
        main_text = json_text({"rows": rows}, meta)
    if args.output is None:
        sys.stdout.write(main_text)
        for name, content in extra.items():
            if isinstance(content, dict):
                sys.stderr.write(json.dumps(content, indent=2) + "\n")
        return
    write_atomic(os.path.join(args.output, f"{args.command}.{args.format}"), main_text)
    for name, content in extra.items():
        if isinstance(content, dict):
            text = json_text(content, meta)
        else:
            text = csv_text(content[0], content[1], meta)
        write_atomic(os.path.join(args.output, name), text)


def _accept(args, meta):
    report = acceptance.run_acceptance(args.seed, args.particles, derive_scales)
    for result in report.criteria:
        print(acceptance.format_line(result), file=sys.stderr)
    print(f"overall: {'PASS' if report.passed else 'FAIL'}", file=sys.stderr)
    text = json_text(report.to_payload(), meta)
    if args.output is None:
        sys.stdout.write(text)
    else:
        write_atomic(os.path.join(args.output, "acceptance_report.json"), text)
    return 0 if report.passed else 1


def run(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parse_args(argv)
    meta = metadata(config_of(args))
    args.params = _params(args)
    try:
        if args.command == "accept":
            return _accept(args, meta)
        start = time.perf_counter()
        header, rows, extra = COMMANDS[args.command](args, derive_scales(args.params))
        meta["runtime_s"] = time.perf_counter() - start
        _emit(args, meta, header, rows, extra)
    except ThermodiffError as exc:
        print(f"thermodiff {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    try:
        return run(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
