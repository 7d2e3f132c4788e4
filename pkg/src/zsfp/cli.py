"""Command-line harness: generate, solve, run, eval, plot.

Files are written deterministically (fixed key order, 17-significant-digit
reals, LF newlines, no timestamps), so identical flags and seeds produce
byte-identical specs, traces, solutions, and plots.

Trace CSV layout: '#'-prefixed header comments carrying the full run
configuration, one header row, then one data row per record —
``k,s,a1,a2`` followed by nine diagnostic columns per state
(vhat1, vhat2, vsum, defect, lyap, terr1, terr2, qerr1, qerr2; the
tracking/q-error columns are left empty when no solution file was supplied).
A run also writes ``<out>.beliefs.json`` holding the final beliefs, which
``eval`` uses to compute the exploitability of the final strategy profile.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .diagnostics import default_lyapunov_lambda, snapshot
from .game_core import (
    StrategyProfile,
    generate_random_game,
    load_spec,
    save_spec,
)
from .learning import Mode, RunConfig, Schedule, run
from .matrix_games import TieRule
from .planning import exploitability, load_solution, save_solution, shapley_value_iteration


class CliError(Exception):
    """User-facing failure; rendered as a single 'error: ...' line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path: str, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _default_seed(value):
    if value is not None:
        return value
    env = os.environ.get("ZSFP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"ZSFP_SEED must be an integer, got {env!r}") from None
    return 0


def _load_spec_file(path: str):
    try:
        with open(path) as fh:
            return load_spec(fh.read())
    except OSError as e:
        raise CliError(f"cannot read spec file {path}: {e.strerror}") from None


def _load_solution_file(path: str):
    try:
        with open(path) as fh:
            return load_solution(fh.read())
    except OSError as e:
        raise CliError(f"cannot read solution file {path}: {e.strerror}") from None


# ---------------------------------------------------------------------------
# trace CSV

_PER_STATE = ("vhat1", "vhat2", "vsum", "defect", "lyap", "terr1", "terr2", "qerr1", "qerr2")


def _columns(n_states: int):
    names = ["k", "s", "a1", "a2"]
    for t in range(n_states):
        names.extend(f"{base}_s{t}" for base in _PER_STATE)
    return names


def _trace_row(k, state, a1, a2, snap, with_solution: bool) -> str:
    parts = [str(k), str(state), str(a1), str(a2)]
    n_states = snap.v_hat_1.shape[0]
    for t in range(n_states):
        parts.append(_fmt(snap.v_hat_1[t]))
        parts.append(_fmt(snap.v_hat_2[t]))
        parts.append(_fmt(snap.v_sum[t]))
        parts.append(_fmt(snap.zero_sum_defect[t]))
        parts.append(_fmt(snap.lyapunov[t]))
        if with_solution:
            parts.append(_fmt(snap.tracking_err_1[t]))
            parts.append(_fmt(snap.tracking_err_2[t]))
            parts.append(_fmt(snap.q_err_1[t]))
            parts.append(_fmt(snap.q_err_2[t]))
        else:
            parts.extend(("", "", "", ""))
    return ",".join(parts)


def _write_trace(path, spec, result, config, schedule, solution, spec_flag, solution_flag):
    lam = config.lyapunov_lambda
    if lam is None:
        lam = default_lyapunov_lambda(spec.discount)
    meta = [
        ("format", "zsfp-trace-1"),
        ("spec", spec_flag),
        ("mode", config.mode.value),
        ("steps", config.steps),
        ("seed", config.seed),
        ("epsilon", _fmt(config.epsilon)),
        ("tie_rule", config.tie_rule.value),
        ("record_every", config.record_every),
        ("lambda", _fmt(lam)),
        ("alpha_exponent", _fmt(schedule.alpha_exponent)),
        ("beta_exponent", _fmt(schedule.beta_exponent)),
        ("beta_log_damping", str(schedule.beta_log_damping).lower()),
        ("solution", solution_flag if solution_flag else ""),
        ("n_states", spec.n_states),
        ("n_actions_1", spec.n_actions_1),
        ("n_actions_2", spec.n_actions_2),
        ("discount", _fmt(spec.discount)),
    ]
    lines = [f"# {key} = {value}" for key, value in meta]
    lines.append(",".join(_columns(spec.n_states)))
    with_solution = solution is not None
    for rec in result.records:
        snap = snapshot(rec.beliefs, spec, solution=solution, lam=lam)
        lines.append(_trace_row(rec.k, rec.state, rec.a1, rec.a2, snap, with_solution))
    snap = snapshot(result.beliefs, spec, solution=solution, lam=lam)
    lines.append(
        _trace_row(config.steps, result.final_state, -1, -1, snap, with_solution)
    )
    _write_text(path, "\n".join(lines) + "\n")

    beliefs = result.beliefs
    sidecar = {
        "final_state": result.final_state,
        "pi_hat_1": beliefs.pi_hat_1.tolist(),
        "pi_hat_2": beliefs.pi_hat_2.tolist(),
        "q_hat_1": beliefs.q_hat_1.tolist(),
        "q_hat_2": beliefs.q_hat_2.tolist(),
        "state_visits": beliefs.state_visits.tolist(),
        "state_action_visits": beliefs.state_action_visits.tolist(),
    }
    _write_text(path + ".beliefs.json", json.dumps(sidecar, indent=2) + "\n")


def _read_trace(path):
    """Parse a trace CSV -> (meta dict, column names, int cols, float cols).

    Float columns use NaN for empty cells (terr/qerr without a solution).
    """
    meta = {}
    names = None
    int_rows = []
    float_rows = []
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise CliError(f"cannot read trace file {path}: {e.strerror}") from None
    with fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if " = " in body:
                    key, value = body.split(" = ", 1)
                    meta[key] = value
                continue
            parts = line.split(",")
            if names is None:
                names = parts
                continue
            if len(parts) != len(names):
                raise CliError(
                    f"malformed trace row with {len(parts)} fields (header has {len(names)})"
                )
            int_rows.append([int(x) for x in parts[:4]])
            float_rows.append([float(x) if x != "" else math.nan for x in parts[4:]])
    if names is None:
        raise CliError(f"trace file {path} has no header row")
    ints = np.array(int_rows, dtype=np.int64).reshape(len(int_rows), 4)
    floats = np.array(float_rows, dtype=np.float64).reshape(len(float_rows), len(names) - 4)
    return meta, names, ints, floats


# ---------------------------------------------------------------------------
# subcommands

def _cmd_generate(args) -> int:
    seed = _default_seed(args.seed)
    spec = generate_random_game(
        args.states, args.actions, args.gamma, payoff_scale=args.scale, seed=seed
    )
    _write_text(args.out, save_spec(spec))
    print(
        f"wrote spec {args.out} (states={spec.n_states}, "
        f"actions={spec.n_actions_1}x{spec.n_actions_2}, discount={spec.discount:g}, "
        f"seed={seed})"
    )
    return 0


def _cmd_solve(args) -> int:
    spec = _load_spec_file(args.spec)
    solution = shapley_value_iteration(spec, tolerance=args.tol, max_iters=args.max_iters)
    _write_text(args.out, save_solution(solution))
    print(
        f"wrote solution {args.out} (iterations={solution.iterations}, "
        f"residual={solution.residual:.3e})"
    )
    return 0


def _parse_seeds(text: str):
    lo, sep, hi = text.partition("..")
    if not sep:
        raise CliError(f"--seeds expects a..b (inclusive), got {text!r}")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise CliError(f"--seeds expects integer endpoints, got {text!r}") from None
    if hi_i < lo_i:
        raise CliError(f"--seeds range is empty: {text!r}")
    return list(range(lo_i, hi_i + 1))


def _seed_path(out: str, seed: int) -> str:
    root, ext = os.path.splitext(out)
    return f"{root}.seed{seed}{ext}"


def _cmd_run(args) -> int:
    if args.seed is not None and args.seeds is not None:
        raise CliError("pass either --seed or --seeds, not both")
    spec = _load_spec_file(args.spec)
    schedule = Schedule(
        alpha_exponent=args.alpha_exp,
        beta_exponent=args.beta_exp,
        beta_log_damping=args.beta_log_damping,
    )
    solution = None
    if args.solution is not None:
        solution = _load_solution_file(args.solution)
    if args.init_from_solution and solution is None:
        raise CliError("--init-from-solution requires --solution")
    initial_profile = solution.equilibrium if args.init_from_solution else None
    initial_q = solution.q_star if args.init_from_solution else None

    if args.seeds is not None:
        seeds = _parse_seeds(args.seeds)
        paths = [_seed_path(args.out, seed) for seed in seeds]
    else:
        seeds = [_default_seed(args.seed)]
        paths = [args.out]

    def one(seed, path):
        config = RunConfig(
            mode=Mode(args.mode),
            steps=args.steps,
            seed=seed,
            epsilon=args.epsilon,
            tie_rule=TieRule(args.tie_rule),
            record_every=args.record_every,
            lyapunov_lambda=args.lyap_lambda,
            initial_profile=initial_profile,
            initial_q=initial_q,
        )
        result = run(spec, config, schedule)
        _write_trace(
            path, spec, result, config, schedule, solution, args.spec, args.solution
        )
        return len(result.records) + 1, result.final_state

    workers = min(len(seeds), os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, seeds, paths))
    else:
        outcomes = [one(seed, path) for seed, path in zip(seeds, paths)]
    for (rows, final_state), path in zip(outcomes, paths):
        print(f"wrote trace {path} ({rows} records, final state {final_state})")
    return 0


_METRIC_HELP = {
    "v_sum_max": "max_s |vhat1 + vhat2|",
    "zero_sum_defect_max": "max_s ||Qhat1 + Qhat2||",
    "tracking_err_max": "max_{i,s} |tracking error|",
    "q_err_max": "max_{i,s} ||Qhat - Q*||",
    "lyapunov_mean": "mean_s V",
}


def _series_stats(series):
    """initial / peak / final-window stats for one per-record series."""
    if np.isnan(series).all():
        return None
    window = max(1, series.shape[0] // 10)
    initial = float(series[0])
    peak = float(np.nanmax(series))
    final = float(np.nanmax(series[-window:]))
    return {
        "initial": initial,
        "final_window_max": final,
        "peak": peak,
        "final_to_initial": final / initial if initial != 0.0 else None,
        "final_to_peak": final / peak if peak != 0.0 else None,
    }


def _cmd_eval(args) -> int:
    spec = _load_spec_file(args.spec)
    meta, names, ints, floats = _read_trace(args.trace)
    expected = _columns(spec.n_states)
    if names != expected:
        raise CliError(
            f"mismatched spec/trace dimensions: trace has {len(names)} columns, "
            f"spec ({spec.n_states} states) needs {len(expected)}"
        )
    n_records = ints.shape[0]
    if n_records == 0:
        raise CliError("no records in trace")

    def stack(base):
        idx = [9 * t + _PER_STATE.index(base) for t in range(spec.n_states)]
        return floats[:, idx]

    series = {
        "v_sum_max": np.abs(stack("vsum")).max(axis=1),
        "zero_sum_defect_max": stack("defect").max(axis=1),
        "tracking_err_max": np.abs(
            np.concatenate([stack("terr1"), stack("terr2")], axis=1)
        ).max(axis=1),
        "q_err_max": np.concatenate([stack("qerr1"), stack("qerr2")], axis=1).max(axis=1),
        "lyapunov_mean": stack("lyap").mean(axis=1),
    }

    sidecar_path = args.trace + ".beliefs.json"
    try:
        with open(sidecar_path) as fh:
            sidecar = json.load(fh)
    except OSError:
        raise CliError(
            f"beliefs sidecar not found: {sidecar_path} (written by `zsfp run`)"
        ) from None
    profile = StrategyProfile(
        np.asarray(sidecar["pi_hat_1"], dtype=np.float64),
        np.asarray(sidecar["pi_hat_2"], dtype=np.float64),
    )
    exploit = exploitability(spec, profile).scalar

    window = max(1, n_records // 10)
    doc = {
        "trace": args.trace,
        "records": n_records,
        "window": window,
        "metrics": {name: _series_stats(values) for name, values in series.items()},
        "exploitability": exploit,
    }

    print(f"trace: {args.trace}")
    print(f"records: {n_records} (final window: last {window})")
    for name, stats in doc["metrics"].items():
        label = f"{name} ({_METRIC_HELP[name]})"
        if stats is None:
            print(f"{label}: n/a (columns empty; run with --solution)")
            continue
        ratio_i = stats["final_to_initial"]
        ratio_p = stats["final_to_peak"]
        print(
            f"{label}: initial={stats['initial']:.6g} peak={stats['peak']:.6g} "
            f"final={stats['final_window_max']:.6g} "
            f"final/initial={'n/a' if ratio_i is None else format(ratio_i, '.6g')} "
            f"final/peak={'n/a' if ratio_p is None else format(ratio_p, '.6g')}"
        )
    print(f"exploitability (final strategy beliefs): {exploit:.6g}")
    json_text = json.dumps(doc)
    print(json_text)
    if args.json is not None:
        _write_text(args.json, json.dumps(doc, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# SVG plotting (hand-rolled primitives; no plotting dependency)

_PLOT_W = 880
_PANEL_H = 200
_MARGIN_L = 70
_MARGIN_R = 24
_MARGIN_T = 56
_PANEL_GAP = 40
_MARGIN_B = 52

_COLORS = {"vhat1": "#2b6cb0", "vhat2": "#c05621", "vsum": "#2f855a"}
_REF_COLOR = "#718096"
_LEGEND = (
    ("vhat1", "player 1 estimate"),
    ("vhat2", "player 2 estimate"),
    ("vsum", "estimate sum"),
)


def _xtick_label(decade: int) -> str:
    return str(10**decade) if decade < 5 else f"1e{decade}"


def _path(xs, ys) -> str:
    pieces = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        cmd = "M" if i == 0 else "L"
        pieces.append(f"{cmd}{x:.2f} {y:.2f}")
    return " ".join(pieces)


def _render_svg(ks, panels, refs):
    """panels: list (per state) of dicts base -> value array; refs: None or
    list of (val1, val2) per state."""
    n_states = len(panels)
    height = _MARGIN_T + n_states * (_PANEL_H + _PANEL_GAP) - _PANEL_GAP + _MARGIN_B
    xs_data = np.log10(ks + 1.0)
    x_max = max(float(xs_data[-1]), 1e-9)
    plot_w = _PLOT_W - _MARGIN_L - _MARGIN_R

    def x_of(v):
        return _MARGIN_L + (v / x_max) * plot_w

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_PLOT_W}" '
        f'height="{height}" viewBox="0 0 {_PLOT_W} {height}" '
        f'font-family="Helvetica,Arial,sans-serif">',
        f'<rect width="{_PLOT_W}" height="{height}" fill="#ffffff"/>',
    ]
    # legend
    lx = _MARGIN_L
    for base, label in _LEGEND:
        out.append(
            f'<line x1="{lx}" y1="24" x2="{lx + 22}" y2="24" '
            f'stroke="{_COLORS[base]}" stroke-width="2"/>'
        )
        out.append(f'<text x="{lx + 27}" y="28" font-size="12">{label}</text>')
        lx += 27 + 9 * len(label) + 18
    if refs is not None:
        out.append(
            f'<line x1="{lx}" y1="24" x2="{lx + 22}" y2="24" stroke="{_REF_COLOR}" '
            f'stroke-width="1.5" stroke-dasharray="5 3"/>'
        )
        out.append(f'<text x="{lx + 27}" y="28" font-size="12">minimax values</text>')

    decades = range(0, int(math.floor(x_max)) + 1)
    for t, series in enumerate(panels):
        top = _MARGIN_T + t * (_PANEL_H + _PANEL_GAP)
        bot = top + _PANEL_H
        lo = min(float(v.min()) for v in series.values())
        hi = max(float(v.max()) for v in series.values())
        if refs is not None:
            lo = min(lo, refs[t][0], refs[t][1])
            hi = max(hi, refs[t][0], refs[t][1])
        if hi - lo < 1e-12:
            lo, hi = lo - 1.0, hi + 1.0
        pad = 0.06 * (hi - lo)
        lo -= pad
        hi += pad

        def y_of(v):
            return bot - (v - lo) / (hi - lo) * _PANEL_H

        out.append(
            f'<text x="{_MARGIN_L}" y="{top - 8}" font-size="13" '
            f'font-weight="bold">state {t}</text>'
        )
        out.append(
            f'<rect x="{_MARGIN_L}" y="{top}" width="{plot_w}" height="{_PANEL_H}" '
            f'fill="none" stroke="#1a202c" stroke-width="1"/>'
        )
        for d in decades:
            x = x_of(float(d))
            out.append(
                f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{bot}" '
                f'stroke="#e2e8f0" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{x:.2f}" y="{bot + 16}" font-size="11" '
                f'text-anchor="middle">{_xtick_label(d)}</text>'
            )
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            v = lo + frac * (hi - lo)
            y = y_of(v)
            out.append(
                f'<line x1="{_MARGIN_L - 4}" y1="{y:.2f}" x2="{_MARGIN_L}" y2="{y:.2f}" '
                f'stroke="#1a202c" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" font-size="11" '
                f'text-anchor="end">{v:.4g}</text>'
            )
        if refs is not None:
            for rv in refs[t]:
                y = y_of(rv)
                out.append(
                    f'<line x1="{_MARGIN_L}" y1="{y:.2f}" x2="{_MARGIN_L + plot_w}" '
                    f'y2="{y:.2f}" stroke="{_REF_COLOR}" stroke-width="1.5" '
                    f'stroke-dasharray="5 3"/>'
                )
        for base in ("vhat1", "vhat2", "vsum"):
            xs = [x_of(v) for v in xs_data]
            ys = [y_of(v) for v in series[base]]
            out.append(
                f'<path d="{_path(xs, ys)}" fill="none" stroke="{_COLORS[base]}" '
                f'stroke-width="1.6"/>'
            )
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2}" y="{height - 14}" font-size="12" '
        f'text-anchor="middle">step k (log scale)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _cmd_plot(args) -> int:
    meta, names, ints, floats = _read_trace(args.trace)
    n_extra = len(names) - 4
    if n_extra <= 0 or n_extra % len(_PER_STATE) != 0:
        raise CliError(f"trace header has unexpected columns ({len(names)})")
    n_states = n_extra // len(_PER_STATE)
    if names != _columns(n_states):
        raise CliError("trace header does not match the expected column layout")
    if ints.shape[0] == 0:
        raise CliError("no records in trace")
    refs = None
    if args.solution is not None:
        solution = _load_solution_file(args.solution)
        if solution.v_star.v_1.shape[0] != n_states:
            raise CliError(
                f"solution has {solution.v_star.v_1.shape[0]} states, trace has {n_states}"
            )
        refs = [
            (float(solution.v_star.v_1[t]), float(solution.v_star.v_2[t]))
            for t in range(n_states)
        ]
    ks = ints[:, 0].astype(np.float64)
    panels = []
    for t in range(n_states):
        panels.append(
            {
                base: floats[:, 9 * t + _PER_STATE.index(base)]
                for base in ("vhat1", "vhat2", "vsum")
            }
        )
    _write_text(args.out, _render_svg(ks, panels, refs))
    print(f"wrote plot {args.out} ({n_states} panels, {ints.shape[0]} records)")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="zsfp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random zero-sum game spec")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True, help="actions per player per state")
    p.add_argument("--gamma", type=float, required=True, help="discount factor in [0, 1)")
    p.add_argument("--scale", type=float, default=1.0, help="payoff scale (default 1.0)")
    p.add_argument("--seed", type=int, default=None, help="default: $ZSFP_SEED or 0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="exact minimax solution via value iteration")
    p.add_argument("--spec", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=1_000_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("run", help="simulate fictitious-play learning dynamics")
    p.add_argument("--spec", required=True)
    p.add_argument(
        "--mode",
        choices=[m.value for m in Mode],
        default=Mode.MODEL_BASED.value,
    )
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help="default: $ZSFP_SEED or 0")
    p.add_argument(
        "--seeds", default=None, help="inclusive range a..b; one trace file per seed"
    )
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--alpha-exp", type=float, default=0.5)
    p.add_argument("--beta-exp", type=float, default=1.0)
    p.add_argument("--beta-log-damping", action="store_true")
    p.add_argument(
        "--tie-rule",
        choices=[t.value for t in TieRule],
        default=TieRule.LOWEST_INDEX.value,
    )
    p.add_argument("--record-every", type=int, default=1000)
    p.add_argument("--lambda", dest="lyap_lambda", type=float, default=None)
    p.add_argument(
        "--solution", default=None, help="enables the tracking/q-error columns"
    )
    p.add_argument(
        "--init-from-solution",
        action="store_true",
        help="start beliefs at the solution's equilibrium and Q*",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="summarize a trace's convergence metrics")
    p.add_argument("--trace", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--json", default=None, help="also write the JSON document here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("plot", help="render a trace to an SVG figure")
    p.add_argument("--trace", required=True)
    p.add_argument("--solution", default=None, help="adds minimax reference lines")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as e:
        print(f"error: {_one_line(e)}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError, OSError) as e:
        print(f"error: {_one_line(e)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
