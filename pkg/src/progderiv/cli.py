"""Command-line front end: ``progderiv {ncd,pdq,scan,diff,search,demo}``.

Exit codes: 0 success, 1 usage or configuration error, 2 failure of the
program under test's adapter (e.g. it cannot be spawned), 3 the analysis
found nothing (no boundary within the search budget).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, report
from .derivative import cdq_distances, pdq
from .distance import COMPRESSORS, DEFAULT_COMPRESSOR, Compressor, default_level, get_distance, ncd_bytes
from .explore import (
    DEFAULT_RANGE,
    DEFAULT_RESOLUTION,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    GeometryMismatchError,
    GridScanConfig,
    NoBoundaryFoundError,
    SearchConfig,
    boundary_search,
    grid_scan,
    heatgrid_diff,
)
from .sut import BUILTIN_NAMES, Domain, SubprocessSpec, SubprocessSut, SutInvocationError, builtin
from .values import CanonicalFormatError, Real, Sequence, parse, render

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SUT = 2
EXIT_NOTHING = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for adapter failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- argument types ------------------------------------------------------------

def _range(text: str) -> tuple:
    try:
        lo, hi = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return lo, hi


def _seed(text):
    if isinstance(text, int):
        return text
    if text == "random":
        return int(np.random.SeedSequence().entropy % (1 << 63))
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer or 'random', got {text!r}")
    if s < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return s


def _point(text: str):
    """A canonical rendering, or comma-separated numbers (one Real per slot)."""
    try:
        return parse(text)
    except CanonicalFormatError:
        pass
    try:
        xs = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a canonical value or number list: {text!r}")
    return Real(xs[0]) if len(xs) == 1 else Sequence([Real(x) for x in xs])


# --- shared flag groups ----------------------------------------------------------

def _add_sut_flags(p):
    g = p.add_argument_group("program under test")
    g.add_argument("--sut", help=f"built-in program: {', '.join(BUILTIN_NAMES)}")
    g.add_argument("--sut-cmd", help="external program, run once per input (shell-style quoting)")
    g.add_argument("--arity", type=int, default=2, help="inputs taken by --sut-cmd (default 2)")
    g.add_argument("--domain", type=_range, default=DEFAULT_RANGE, metavar="LO,HI",
                   help="numeric domain of every --sut-cmd input (default -2,8)")
    g.add_argument("--timeout-ms", type=int, default=5000, help="per-call timeout for --sut-cmd")
    g.add_argument("--max-concurrency", type=int, default=4, help="parallel calls of --sut-cmd")
    g.add_argument("--serial", action="store_true", help="--sut-cmd must not run concurrently")


def _add_compressor_flags(p):
    p.add_argument("--compressor", choices=COMPRESSORS, default=DEFAULT_COMPRESSOR)
    p.add_argument("--level", type=int, default=None,
                   help="compression level (default 9, or $PROGDERIV_LEVEL)")


def _add_output_flags(p, what):
    p.add_argument("--out", help=what)
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit creation times so outputs are byte-identical across runs")


def _add_scan_flags(p):
    g = p.add_argument_group("grid")
    g.add_argument("--x-range", type=_range, default=DEFAULT_RANGE, metavar="LO,HI")
    g.add_argument("--y-range", type=_range, default=DEFAULT_RANGE, metavar="LO,HI")
    g.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION, help="cells per axis")
    g.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="neighbours per cell")
    g.add_argument("--radius", type=float, default=None,
                   help="neighbourhood half-width (default 3/4 of a cell side)")
    g.add_argument("--jobs", type=int, default=1, help="threads used to scan rows")


def _add_search_flags(p):
    g = p.add_argument_group("search")
    g.add_argument("--budget", type=int, default=2000, help="candidate pairs per search")
    g.add_argument("--seeds", type=int, default=1, help="independent searches, seeds SEED..SEED+k-1")
    g.add_argument("--step", type=float, default=0.5, help="initial mutation scale")
    g.add_argument("--decay", type=float, default=0.9, help="geometric decay factor")
    g.add_argument("--pressure", type=float, default=0.5, help="weight of pair closeness in the fitness")
    g.add_argument("--d-out-floor", type=float, default=0.2,
                   help="output distance a straddling pair must reach")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="progderiv", description="Program derivatives and boundary exploration "
                     "with compression distances.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON file of flag defaults (keys as in --help, with underscores)")
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                       help=f"random seed (default {DEFAULT_SEED}); 'random' draws one from entropy")
        return p

    p = command("ncd", "Normalized compression distance between two files or strings.")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--text", action="store_true", help="treat A and B as literal strings, not paths")
    _add_compressor_flags(p)

    p = command("pdq", "Difference quotient of a program for one input pair.")
    p.add_argument("a", type=_point, help="input, e.g. 2.9,2.9 or S[R:2.9,R:2.9]")
    p.add_argument("b", type=_point)
    p.add_argument("--d-in", default="ncd", choices=["ncd", "abs", "euclid"])
    p.add_argument("--d-out", default="ncd", choices=["ncd", "abs", "euclid"])
    _add_sut_flags(p)
    _add_compressor_flags(p)

    p = command("scan", "Grid scan of the sampled compression quotient; writes OUT.csv and OUT.pgm.")
    _add_sut_flags(p)
    _add_scan_flags(p)
    _add_compressor_flags(p)
    _add_output_flags(p, "output path prefix (default: the program name)")

    p = command("diff", "Cell-wise difference of two grid CSVs; writes OUT.csv, OUT.pgm, OUT.json.")
    p.add_argument("grid1")
    p.add_argument("grid2")
    _add_output_flags(p, "output path prefix (default: diff)")

    p = command("search", "Seeded (1+1)-ES searches for close input pairs across a boundary.")
    _add_sut_flags(p)
    _add_search_flags(p)
    _add_compressor_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="searches run concurrently")
    _add_output_flags(p, "pairs JSON path (default: pairs.json)")

    p = command("demo", "Scan both constrained-sum programs, diff them and search program one.")
    _add_scan_flags(p)
    _add_search_flags(p)
    _add_compressor_flags(p)
    _add_output_flags(p, "output directory, must be empty or absent "
                         "(default: progderiv-demo, plus a timestamp unless --no-timestamp)")
    p.set_defaults(seeds=20)
    return parser


# --- helpers ------------------------------------------------------------------

def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so explicit flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help", "a", "b", "grid1", "grid2"):
            raise UsageError(f"config key {key!r} is not a {args.command} option")
        action = known[dest]
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        if action.type is not None and isinstance(value, str):
            try:
                value = action.type(value)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key!r}: {exc}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _compressor(args) -> Compressor:
    level = default_level() if args.level is None else args.level
    try:
        return Compressor(args.compressor, level)
    except ValueError as exc:
        raise UsageError(str(exc))


def _make_sut(args):
    if bool(args.sut) == bool(args.sut_cmd):
        raise UsageError("give exactly one of --sut or --sut-cmd")
    if args.sut:
        try:
            return builtin(args.sut)
        except (KeyError, ValueError):
            raise UsageError(f"unknown program {args.sut!r}; built-ins are {', '.join(BUILTIN_NAMES)}")
    try:
        spec = SubprocessSpec.from_command(args.sut_cmd, timeout_ms=args.timeout_ms,
                                           max_concurrency=args.max_concurrency, serial_only=args.serial)
        dom = Domain("numeric", *args.domain)
        return SubprocessSut(spec, args.arity, (dom,) * args.arity)
    except ValueError as exc:
        raise UsageError(str(exc))


def _scan_config(args, c) -> GridScanConfig:
    try:
        return GridScanConfig(tuple(args.x_range), tuple(args.y_range), args.resolution, args.samples,
                              args.radius, c, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))


def _search_configs(args):
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    try:
        return [SearchConfig(budget=args.budget, step=args.step, decay=args.decay, pressure=args.pressure,
                             seed=args.seed + k, d_out_floor=args.d_out_floor)
                for k in range(args.seeds)]
    except ValueError as exc:
        raise UsageError(str(exc))


def _fmt(q) -> str:
    return "undefined" if q is None or (isinstance(q, float) and math.isnan(q)) else report.fmt_number(q)


def _write_scan(g, prefix, timestamp):
    csv_path = report.export_grid_csv(g, f"{prefix}.csv", timestamp)
    pgm_path = report.export_grid_image(g, f"{prefix}.pgm", timestamp)
    return csv_path, pgm_path


def _scan_summary(g) -> str:
    cells = g.argmax_cells()
    if not cells:
        return f"no defined cells ({g.undefined_count()} undefined)"
    i, j = cells[0]
    return (f"max quotient {_fmt(float(g.quotients[j, i]))} at cell ({g.x_centers[i]}, {g.y_centers[j]})"
            f"{' and %d more' % (len(cells) - 1) if len(cells) > 1 else ''}; "
            f"{g.undefined_count()} undefined cells")


def _run_searches(sut, cfgs, c, jobs):
    def one(cfg):
        try:
            return boundary_search(sut, cfg, c), None
        except NoBoundaryFoundError as exc:
            return None, {"seed": cfg.seed, "error": "no-boundary-found", "message": str(exc)}

    if jobs > 1 and sut.parallel_safe:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, cfgs))
    else:
        results = [one(cfg) for cfg in cfgs]
    pairs = [p for p, _ in results if p is not None]
    failures = [f for _, f in results if f is not None]
    return pairs, failures


def _search_provenance(sut, cfgs, c) -> dict:
    base = cfgs[0].to_dict()
    base.pop("seed")
    return {"sut": sut.describe(), "search": base, "seeds": [cfg.seed for cfg in cfgs],
            "compressor": c.describe()}


# --- commands -------------------------------------------------------------------

def cmd_ncd(args) -> int:
    c = _compressor(args)
    if args.text:
        x, y = args.a.encode("utf-8"), args.b.encode("utf-8")
    else:
        try:
            x, y = Path(args.a).read_bytes(), Path(args.b).read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read input: {exc}")
    print(f"{report.fmt_number(ncd_bytes(c, x, y))}\t# {c.name} level {c.level}")
    return EXIT_OK


def cmd_pdq(args) -> int:
    c = _compressor(args)
    sut = _make_sut(args)
    d_out = get_distance(args.d_out, c)
    d_in = get_distance(args.d_in, c)
    if args.d_out == "ncd" and args.d_in == "ncd":
        d_out, d_in = cdq_distances(c)
    try:
        r = pdq(sut, d_out, d_in, args.a, args.b)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))
    print(f"P(a) = {render(r.output_a)}")
    print(f"P(b) = {render(r.output_b)}")
    print(f"d_in = {report.fmt_number(r.d_in)} ({r.d_in_name}), "
          f"d_out = {report.fmt_number(r.d_out)} ({r.d_out_name})")
    if r.defined:
        print(f"quotient = {report.fmt_number(r.quotient)}")
    else:
        print(f"quotient undefined: {r.undefined_reason}")
    return EXIT_OK


def cmd_scan(args) -> int:
    c = _compressor(args)
    sut = _make_sut(args)
    cfg = _scan_config(args, c)
    try:
        g = grid_scan(sut, cfg, jobs=args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc))
    prefix = args.out or sut.name.replace(":", "_")
    csv_path, pgm_path = _write_scan(g, prefix, not args.no_timestamp)
    print(f"{sut.name}: {_scan_summary(g)}")
    print(f"wrote {csv_path} and {pgm_path}")
    return EXIT_OK


def cmd_diff(args) -> int:
    try:
        g1, g2 = report.read_grid_csv(args.grid1), report.read_grid_csv(args.grid2)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read grid: {exc}")
    try:
        d = heatgrid_diff(g1, g2)
    except GeometryMismatchError as exc:
        raise UsageError(str(exc))
    prefix = args.out or "diff"
    prov = {"grid1": {"file": Path(args.grid1).name, "sut": g1.sut},
            "grid2": {"file": Path(args.grid2).name, "sut": g2.sut},
            "scan": g1.config.to_dict()}
    report.export_diff_csv(d, f"{prefix}.csv", prov, not args.no_timestamp)
    report.export_diff_image(d, f"{prefix}.pgm")
    Path(f"{prefix}.json").write_text(json.dumps(d.summary(), sort_keys=True, indent=2) + "\n",
                                      encoding="utf-8")
    s = d.summary()
    print(f"{s['nonzero_cells']} of {s['cells']} cells differ, {s['status_mismatch']} differ in "
          f"definedness, max |diff| {report.fmt_number(s['max_abs_diff'])}")
    print(f"wrote {prefix}.csv, {prefix}.pgm and {prefix}.json")
    return EXIT_OK


def cmd_search(args) -> int:
    c = _compressor(args)
    sut = _make_sut(args)
    cfgs = _search_configs(args)
    try:
        sut.numeric_bounds()
    except ValueError as exc:
        raise UsageError(str(exc))
    pairs, failures = _run_searches(sut, cfgs, c, args.jobs)
    out = args.out or "pairs.json"
    report.export_pairs_json(pairs, out, _search_provenance(sut, cfgs, c), failures,
                             not args.no_timestamp, args.d_out_floor)
    straddling = sum(p.straddles(args.d_out_floor) for p in pairs)
    print(f"{len(pairs)} of {len(cfgs)} searches found a pair, {straddling} straddle a boundary; wrote {out}")
    for f in failures:
        print(f"seed {f['seed']}: {f['message']}", file=sys.stderr)
    return EXIT_OK if pairs else EXIT_NOTHING


def cmd_demo(args) -> int:
    from . import reference

    timestamp = not args.no_timestamp
    if args.out:
        out = Path(args.out)
    else:
        stamp = report.base_provenance(True)["created"].replace(":", "").replace("+0000", "Z")
        out = Path("progderiv-demo" + (f"-{stamp}" if timestamp else ""))
    if out.exists() and (not out.is_dir() or any(out.iterdir())):
        raise UsageError(f"{out} exists and is not an empty directory")
    c = _compressor(args)
    cfg = _scan_config(args, c)
    cfgs = _search_configs(args)
    out.mkdir(parents=True, exist_ok=True)

    lines = [f"progderiv {__version__} demo: constrained-sum programs one (sum1) and two (sum2)", ""]
    grids = {}
    for name, tag in (("sum1", "g1"), ("sum2", "g2")):
        g = grid_scan(builtin(name), cfg, jobs=args.jobs)
        _write_scan(g, out / tag, timestamp)
        grids[tag] = g
        m_edge, m_inner, ratio = reference.grid_boundary_contrast(g)
        lines.append(f"{tag} ({name}): {_scan_summary(g)}")
        lines.append(f"  mean quotient on boundary cells {m_edge:.4f}, interior cells {m_inner:.4f}, "
                     f"ratio {ratio:.2f}")
    d = heatgrid_diff(grids["g1"], grids["g2"])
    prov = {"grid1": {"file": "g1.csv", "sut": grids["g1"].sut},
            "grid2": {"file": "g2.csv", "sut": grids["g2"].sut}, "scan": cfg.to_dict()}
    report.export_diff_csv(d, out / "diff.csv", prov, timestamp)
    report.export_diff_image(d, out / "diff.pgm")
    summary = {**d.summary(), "top_decile_in_band": reference.diff_band_fraction(d, grids["g1"], 0.1)}
    (out / "diff_summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                                           encoding="utf-8")
    lines.append(f"diff: {summary['nonzero_cells']} cells differ; "
                 f"{summary['top_decile_in_band']:.0%} of the top decile lie in the band 6 <= x+y < 7")

    sut = builtin("sum1")
    pairs, failures = _run_searches(sut, cfgs, c, 1)
    report.export_pairs_json(pairs, out / "pairs.json", _search_provenance(sut, cfgs, c), failures,
                             timestamp, args.d_out_floor)
    good = [p for p in pairs if p.straddles(args.d_out_floor) and p.euclidean_gap < 0.05
            and reference.boundary_distance(p.midpoint) < 0.1]
    lines.append(f"search: {len(good)} of {len(cfgs)} seeded searches squeezed a validity boundary "
                 f"to a gap below 0.05")
    for p in pairs:
        lines.append(f"  seed {p.seed}: {render(p.result.input_a)} -> {render(p.result.output_a)} | "
                     f"{render(p.result.input_b)} -> {render(p.result.output_b)} "
                     f"(gap {p.euclidean_gap:.3g}, quotient {p.quotient:.4g})")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    print(f"wrote results to {out}")
    return EXIT_OK


COMMANDS = {"ncd": cmd_ncd, "pdq": cmd_pdq, "scan": cmd_scan, "diff": cmd_diff,
            "search": cmd_search, "demo": cmd_demo}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"progderiv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SutInvocationError as exc:
        print(f"progderiv: program under test failed: {exc}", file=sys.stderr)
        return EXIT_SUT


if __name__ == "__main__":
    sys.exit(main())
