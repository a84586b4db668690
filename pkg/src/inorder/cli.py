"""Command-line front end: emits trade-off curves, envelopes, cost curves and
simulation reports as CSV/JSON data files for external plotting.

Exit codes: 0 success, 2 usage error, 3 domain/validation error. Identical
command line and seed produce byte-identical output (floats are written with
12 significant digits, JSON keys are sorted).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys

from .analytics import (
    SuggestedSchemeParams,
    arq_point,
    cost_of_optimal_lambda,
    cost_of_optimal_tau,
    divergence,
    suggested_point,
    tradeoff_point,
)
from .envelope import ENUMERATION_CAP, compute_envelope
from .model import ChannelParams, MixtureSpec, SchemeVector, SimReport, TradeoffPoint
from .simulate import FullRankConfig, simulate_arq, simulate_full_rank, simulate_mixture, simulate_time_invariant

TRADEOFF_COLUMNS = ["kind", "detail", "tau", "lambda"]
ENVELOPE_COLUMNS = ["scheme", "tau", "lambda", "on_envelope"]
COST_COLUMNS = ["d", "tau_at_optimal_lambda", "lambda_at_optimal_tau"]
THIST_COLUMNS = ["t", "count", "ccdf"]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _round12(x):
    if isinstance(x, float):
        return float(format(x, ".12g"))
    return x


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _parse_grid(text: str, flag: str) -> list[float]:
    try:
        start, stop, step = (float(tok) for tok in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"{flag} must look like start:stop:step, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"{flag} needs step > 0 and stop >= start, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _point_rows(points) -> list[list]:
    return [[kind, detail, pt.tau, pt.lam] for kind, detail, pt in points]


def cmd_tradeoff(args) -> int:
    p = args.p
    if not 0.0 < p < 1.0:
        raise ValueError("-p must lie strictly in (0, 1)")
    points = []
    if args.scheme:
        x = SchemeVector.parse(args.scheme)
        points.append(("scheme", x.compact(), tradeoff_point(x, p)))
    if args.arq:
        points.append(("arq", "", arq_point(p)))
    if args.no_feedback:
        grid = _parse_grid(args.r_grid, "--r-grid")
        for r in grid:
            if not 0.0 < r <= p:
                raise ValueError(f"--r-grid values must lie in (0, p={p}], got {r:g}")
            points.append(
                ("no-feedback", f"{r:.12g}", TradeoffPoint(r, divergence(r, p), f"no-feedback:r={r:.12g}"))
            )
    if args.suggested:
        if args.d is None:
            raise ValueError("--suggested requires -d")
        for a in range(1, args.d + 1):
            params = SuggestedSchemeParams(d=args.d, a=a)
            points.append(("suggested", f"a={a}", suggested_point(params, p)))
    if not points:
        raise ValueError("nothing to emit: pass --scheme, --arq, --no-feedback or --suggested")
    if args.format == "csv":
        _write_text(args.output, _csv_text(TRADEOFF_COLUMNS, _point_rows(points)))
    else:
        obj = {
            "kind": "tradeoff",
            "p": _round12(p),
            "points": [
                {"kind": k, "detail": d, "tau": _round12(pt.tau), "lambda": _round12(pt.lam)}
                for k, d, pt in points
            ],
        }
        _write_text(args.output, _json_text(obj))
    return 0


def cmd_envelope(args) -> int:
    if not 0.0 < args.p < 1.0:
        raise ValueError("-p must lie strictly in (0, 1)")
    if args.d < 1:
        raise ValueError("-d must be >= 1")
    result = compute_envelope(args.d, args.p, dedupe=not args.no_dedupe, cap=args.cap)
    vertex_keys = {(v.tau, v.lam, v.provenance) for v in result.vertices}
    if args.format == "csv":
        rows = [
            [
                pt.provenance.removeprefix("scheme:"),
                pt.tau,
                pt.lam,
                "true" if (pt.tau, pt.lam, pt.provenance) in vertex_keys else "false",
            ]
            for pt in result.all_points
        ]
        _write_text(args.output, _csv_text(ENVELOPE_COLUMNS, rows))
    else:
        obj = {
            "kind": "envelope",
            "d": args.d,
            "p": _round12(args.p),
            "all_points": [
                {
                    "scheme": pt.provenance.removeprefix("scheme:"),
                    "tau": _round12(pt.tau),
                    "lambda": _round12(pt.lam),
                    "on_envelope": (pt.tau, pt.lam, pt.provenance) in vertex_keys,
                }
                for pt in result.all_points
            ],
            "vertices": [
                {
                    "scheme": v.provenance.removeprefix("scheme:"),
                    "tau": _round12(v.tau),
                    "lambda": _round12(v.lam),
                }
                for v in result.vertices
            ],
            "segments": [
                {
                    "left_scheme": a.provenance.removeprefix("scheme:"),
                    "right_scheme": b.provenance.removeprefix("scheme:"),
                    "tau_left": _round12(a.tau),
                    "tau_right": _round12(b.tau),
                    "lambda_left": _round12(a.lam),
                    "lambda_right": _round12(b.lam),
                    "mixture_rule": "use left scheme with probability (tau_right - tau) / (tau_right - tau_left)",
                }
                for a, b in result.segments
            ],
        }
        _write_text(args.output, _json_text(obj))
    return 0


def _report_json(report: SimReport) -> str:
    obj = report.to_dict()
    for key in ("tau_hat", "tau_stderr", "p_d_hat", "lambda_hat", "lambda_stderr"):
        if obj[key] is not None:
            obj[key] = _round12(obj[key])
    obj["config"] = {k: _round12(v) if isinstance(v, float) else v for k, v in obj["config"].items()}
    return _json_text(obj)


def _thist_csv(report: SimReport) -> str:
    cc = report.ccdf()
    rows = [[t, report.t_histogram.get(t, 0), cc[t]] for t in sorted(cc)]
    return _csv_text(THIST_COLUMNS, rows)


def cmd_simulate(args) -> int:
    if not 0.0 < args.p < 1.0:
        raise ValueError("-p must lie strictly in (0, 1)")
    params = ChannelParams(p=args.p, seed=args.seed)
    if args.engine == "arq":
        if args.slots is None:
            raise ValueError("simulate arq requires -n/--slots")
        report = simulate_arq(params, args.slots)
    elif args.engine == "full-rank":
        if args.slots is None:
            raise ValueError("simulate full-rank requires -n/--slots")
        segments = None
        if args.rate_segments:
            segs = []
            for part in args.rate_segments.split(","):
                try:
                    n_txt, r_txt = part.split(":")
                    segs.append((int(n_txt), float(r_txt)))
                except ValueError as exc:
                    raise ValueError(
                        f"--rate-segments must look like slots:rate[,slots:rate...], got {args.rate_segments!r}"
                    ) from exc
            segments = tuple(segs)
        elif args.r is None:
            raise ValueError("simulate full-rank requires -r or --rate-segments")
        report = simulate_full_rank(
            FullRankConfig(r=args.r if args.r is not None else segments[0][1], n_slots=args.slots, segments=segments),
            params,
        )
    elif args.engine == "scheme":
        if args.scheme is None or args.blocks is None:
            raise ValueError("simulate scheme requires --scheme and --blocks")
        report = simulate_time_invariant(SchemeVector.parse(args.scheme), params, args.blocks)
    elif args.engine == "mixture":
        if args.schemes is None or args.weights is None or args.blocks is None:
            raise ValueError("simulate mixture requires --schemes, --weights and --blocks")
        schemes = tuple(SchemeVector.parse(tok) for tok in args.schemes.split(";"))
        weights = tuple(float(tok) for tok in args.weights.split(","))
        report = simulate_mixture(MixtureSpec(schemes=schemes, weights=weights), params, args.blocks)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown engine {args.engine!r}")
    _write_text(args.output, _report_json(report))
    if args.t_hist:
        _write_text(args.t_hist, _thist_csv(report))
    return 0


def cmd_cost_curves(args) -> int:
    if not 0.0 < args.p < 1.0:
        raise ValueError("-p must lie strictly in (0, 1)")
    if args.d_max < 1:
        raise ValueError("--d-max must be >= 1")
    rows = []
    for d in range(1, args.d_max + 1):
        rows.append([d, cost_of_optimal_lambda(args.p, d).tau, cost_of_optimal_tau(args.p, d).lam])
    if args.format == "csv":
        _write_text(args.output, _csv_text(COST_COLUMNS, rows))
    else:
        obj = {
            "kind": "cost-curves",
            "p": _round12(args.p),
            "rows": [
                {"d": d, "tau_at_optimal_lambda": _round12(t), "lambda_at_optimal_tau": _round12(l)}
                for d, t, l in rows
            ],
        }
        _write_text(args.output, _json_text(obj))
    return 0


def _validate_float(value: str, lo: float | None = None, hi: float | None = None) -> tuple[float | None, str | None]:
    try:
        x = float(value)
    except ValueError:
        return None, f"not a number: {value!r}"
    if not math.isfinite(x):
        return None, f"not finite: {value!r}"
    if lo is not None and x < lo:
        return None, f"value {x} below {lo}"
    if hi is not None and x > hi:
        return None, f"value {x} above {hi}"
    return x, None


def _validate_csv(path: str, rows: list[dict]) -> list[str]:
    diags = []
    header = list(rows[0].keys()) if rows else []
    if header == TRADEOFF_COLUMNS:
        for i, row in enumerate(rows):
            for col, lo in (("tau", 0.0), ("lambda", 0.0)):
                _, err = _validate_float(row[col], lo=lo)
                if err:
                    diags.append(f"{path}: row {i + 1} column {col}: {err}")
    elif header == ENVELOPE_COLUMNS:
        vertices = []
        for i, row in enumerate(rows):
            tau, err = _validate_float(row["tau"], lo=0.0, hi=1.0)
            if err:
                diags.append(f"{path}: row {i + 1} column tau: {err}")
            lam, err = _validate_float(row["lambda"], lo=0.0)
            if err:
                diags.append(f"{path}: row {i + 1} column lambda: {err}")
            if row["on_envelope"] not in ("true", "false"):
                diags.append(f"{path}: row {i + 1}: on_envelope must be true/false")
            elif row["on_envelope"] == "true" and tau is not None and lam is not None:
                vertices.append((tau, lam))
        vertices.sort()
        for (t1, l1), (t2, l2) in zip(vertices, vertices[1:]):
            if not (t1 < t2 and l1 > l2):
                diags.append(f"{path}: envelope vertices not strictly monotone at tau={t2}")
    elif header == COST_COLUMNS:
        for i, row in enumerate(rows):
            for col in ("tau_at_optimal_lambda", "lambda_at_optimal_tau"):
                _, err = _validate_float(row[col], lo=0.0)
                if err:
                    diags.append(f"{path}: row {i + 1} column {col}: {err}")
    elif header == THIST_COLUMNS:
        last = 1.0 + 1e-12
        for i, row in enumerate(rows):
            if not row["count"].isdigit():
                diags.append(f"{path}: row {i + 1}: count must be a non-negative integer")
            c, err = _validate_float(row["ccdf"], lo=0.0, hi=1.0)
            if err:
                diags.append(f"{path}: row {i + 1} column ccdf: {err}")
            elif c > last + 1e-12:
                diags.append(f"{path}: row {i + 1}: ccdf must be non-increasing")
            else:
                last = c
    else:
        diags.append(f"{path}: unrecognised CSV header {header}")
    return diags


def _validate_json(path: str, obj) -> list[str]:
    diags = []
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "tradeoff":
        for i, pt in enumerate(obj.get("points", [])):
            if not (isinstance(pt.get("tau"), (int, float)) and pt["tau"] >= 0):
                diags.append(f"{path}: point {i}: bad tau")
            if not (isinstance(pt.get("lambda"), (int, float)) and pt["lambda"] >= 0):
                diags.append(f"{path}: point {i}: bad lambda")
    elif kind == "envelope":
        vs = obj.get("vertices", [])
        for a, b in zip(vs, vs[1:]):
            if not (a["tau"] < b["tau"] and a["lambda"] > b["lambda"]):
                diags.append(f"{path}: vertices not strictly monotone at tau={b['tau']}")
        if len(obj.get("segments", [])) != max(0, len(vs) - 1):
            diags.append(f"{path}: segment count does not match vertex count")
    elif kind == "sim-report":
        tau = obj.get("tau_hat")
        if not (isinstance(tau, (int, float)) and 0.0 <= tau <= 1.0):
            diags.append(f"{path}: tau_hat out of [0, 1]")
        hist = obj.get("t_histogram", [])
        total = 0
        for entry in hist:
            if not (isinstance(entry, list) and len(entry) == 2 and entry[1] >= 0):
                diags.append(f"{path}: malformed t_histogram entry {entry}")
            else:
                total += entry[1]
        if total != obj.get("n_t_samples"):
            diags.append(f"{path}: t_histogram counts do not sum to n_t_samples")
        lam = obj.get("lambda_hat")
        if lam is not None and lam < 0:
            diags.append(f"{path}: negative lambda_hat")
    elif kind == "cost-curves":
        for i, row in enumerate(obj.get("rows", [])):
            if row.get("d", 0) < 1:
                diags.append(f"{path}: row {i}: bad d")
    else:
        diags.append(f"{path}: unrecognised JSON kind {kind!r}")
    return diags


def cmd_validate(args) -> int:
    diags: list[str] = []
    for path in args.paths:
        try:
            with open(path, "r", newline="") as fh:
                text = fh.read()
        except OSError as exc:
            diags.append(f"{path}: cannot read: {exc}")
            continue
        if path.endswith(".json"):
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                diags.append(f"{path}: invalid JSON: {exc}")
                continue
            diags.extend(_validate_json(path, obj))
        else:
            rows = list(csv.DictReader(_io.StringIO(text)))
            if not rows:
                reader = csv.reader(_io.StringIO(text))
                header = next(reader, None)
                if header not in (TRADEOFF_COLUMNS, ENVELOPE_COLUMNS, COST_COLUMNS, THIST_COLUMNS):
                    diags.append(f"{path}: unrecognised CSV header {header}")
            else:
                diags.extend(_validate_csv(path, rows))
    for d in diags:
        print(d, file=sys.stderr)
    if diags:
        raise ValueError(f"{len(diags)} validation diagnostic(s)")
    print(f"validated {len(args.paths)} file(s), zero diagnostics")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inorder",
        description="Throughput vs in-order decoding delay trade-offs over an erasure channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tradeoff", help="emit (tau, lambda) rows for schemes and closed forms")
    t.add_argument("-p", type=float, required=True, help="slot success probability, in (0,1)")
    t.add_argument("--scheme", help="comma-separated scheme vector, e.g. 1,0,3,0")
    t.add_argument("--arq", action="store_true", help="emit the immediate-feedback point")
    t.add_argument("--no-feedback", action="store_true", help="emit the no-feedback curve over --r-grid")
    t.add_argument("--r-grid", default="0.01:0.59:0.01", help="start:stop:step grid of introduction rates")
    t.add_argument("--suggested", action="store_true", help="emit the two-burst family for a = 1..d")
    t.add_argument("-d", type=int, help="block length for --suggested")
    t.add_argument("--format", choices=["csv", "json"], default="csv")
    t.add_argument("-o", "--output", help="output path (default stdout)")
    t.set_defaults(func=cmd_tradeoff)

    e = sub.add_parser("envelope", help="enumerate schemes and emit the optimal trade-off envelope")
    e.add_argument("-d", type=int, required=True)
    e.add_argument("-p", type=float, required=True)
    e.add_argument("--no-dedupe", action="store_true", help="keep equivalent scheme vectors separate")
    e.add_argument("--cap", type=int, default=ENUMERATION_CAP, help="enumeration cap on d")
    e.add_argument("--format", choices=["csv", "json"], default="csv")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_envelope)

    s = sub.add_parser("simulate", help="run a Monte Carlo engine and emit a report")
    s.add_argument("engine", choices=["arq", "full-rank", "scheme", "mixture"])
    s.add_argument("-p", type=float, required=True)
    s.add_argument("-n", "--slots", type=int, help="horizon in slots (arq, full-rank)")
    s.add_argument("--blocks", type=int, help="horizon in blocks (scheme, mixture)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-r", type=float, help="packet introduction rate (full-rank)")
    s.add_argument("--rate-segments", help="piecewise schedule slots:rate[,slots:rate...] (full-rank)")
    s.add_argument("--scheme", help="scheme vector (scheme engine)")
    s.add_argument("--schemes", help="semicolon-separated scheme vectors (mixture engine)")
    s.add_argument("--weights", help="comma-separated mixture weights (mixture engine)")
    s.add_argument("--t-hist", help="also write the T histogram CSV to this path")
    s.add_argument("-o", "--output", help="report JSON path (default stdout)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("cost-curves", help="best tau (or lambda) versus d when the other is optimal")
    c.add_argument("-p", type=float, required=True)
    c.add_argument("--d-max", type=int, default=20)
    c.add_argument("--format", choices=["csv", "json"], default="csv")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_cost_curves)

    v = sub.add_parser("validate", help="re-read emitted files and check their invariants")
    v.add_argument("paths", nargs="+")
    v.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:  # console-script wrapper
    sys.exit(main())


if __name__ == "__main__":
    entry()
