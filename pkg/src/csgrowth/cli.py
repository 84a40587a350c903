"""Command-line entry point: ``csgrowth <command> [options]``.

Exit status: 0 on success, 2 for configuration errors, 3 for degenerate
dynamics, 4 when ``classify --strict`` ends Inconclusive, 1 for internal
consistency failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable

from . import FORMULA_SET, __version__
from .causet import DEFAULT_CAP, GrowthTree, canonical_form
from .covariant import originary_measure
from .dynamics import FAMILIES, Couplings, couplings_from_spec
from .errors import (
    CapExceeded,
    ConfigError,
    ConsistencyError,
    ContractError,
    DegenerateDynamics,
    UnsupportedDynamics,
)
from .measure import Event, MeasureEngine
from .sampler import SampleConfig, empirical_counts, sample_many
from .variation import ClassifyOptions, Status, classify

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4

# keys accepted in a --config file; everything else is rejected
CONFIG_KEYS = {
    "couplings", "n", "n_max", "event", "window", "margin", "evidence", "strict",
    "tol", "count", "seed", "precision", "out", "format", "cap", "threads",
}
DEFAULTS: dict[str, Any] = {
    "n_max": None, "event": None, "window": "64,4096", "margin": 0.1, "evidence": False,
    "strict": False, "tol": 1e-12, "count": 1000, "seed": 0, "precision": None,
    "out": "-", "format": "json", "cap": DEFAULT_CAP, "threads": None,
}
COUPLING_FLAGS = ("family", "q", "t", "k", "s", "phi", "terms", "head", "rule", "phi0")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(parser: argparse.ArgumentParser, couplings: bool = True) -> None:
    g = parser.add_argument_group("run")
    g.add_argument("--config", help="JSON run configuration; flags override its fields")
    g.add_argument("--out", help="output path, '-' for stdout (default)")
    g.add_argument("--format", choices=("json", "csv"))
    g.add_argument("--cap", type=int, help=f"largest enumerable level (default {DEFAULT_CAP})")
    g.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    g.add_argument("--precision", "--bits", dest="precision", type=int,
                   help="extended precision in mantissa bits (default: double)")
    if not couplings:
        return
    c = parser.add_argument_group("couplings")
    c.add_argument("--couplings", help="coupling specification as JSON text or a file path")
    c.add_argument("--family", choices=FAMILIES)
    c.add_argument("--q", help="percolation parameter, e.g. 0.5+0.3i")
    c.add_argument("--t", help="explicit couplings, comma separated: 1,0,1i")
    c.add_argument("--k", type=int, help="single_k index")
    c.add_argument("--s", type=float, help="single_k modulus or geometric tail ratio")
    c.add_argument("--phi", type=float, help="single_k phase")
    c.add_argument("--terms", help="finite_set terms k:s:phi, comma separated")
    c.add_argument("--head", help="tail_colinear head couplings, comma separated")
    c.add_argument("--rule", help="tail_colinear rule: geometric or power4")
    c.add_argument("--phi0", type=float, help="tail_colinear tail phase")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csgrowth", description="Sequential growth dynamics for causal sets.")
    parser.add_argument("--version", action="version", version=f"csgrowth {__version__} (formula-set {FORMULA_SET})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enum", help="export the level-n catalog")
    p.add_argument("--n", type=int)
    _common(p, couplings=False)

    p = sub.add_parser("measure", help="node or event measures at level n")
    p.add_argument("--n", type=int)
    p.add_argument("--event", help="node indices, comma separated")
    _common(p)

    p = sub.add_parser("zeta", help="colinearity defects and S_n up to n_max")
    p.add_argument("--n-max", dest="n_max", type=int)
    _common(p)

    p = sub.add_parser("classify", help="bounded-variation verdict")
    p.add_argument("--window", help="fit window a,b (default 64,4096)")
    p.add_argument("--margin", type=float)
    p.add_argument("--evidence", action="store_true", default=None, help="always run the numeric fit")
    p.add_argument("--strict", action="store_true", default=None, help="exit 4 on Inconclusive")
    _common(p)

    p = sub.add_parser("orig", help="originary event measure")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--tol", type=float)
    _common(p)

    p = sub.add_parser("sample", help="classical growth samples")
    p.add_argument("--n", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    _common(p)
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    return data


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win) into one run config."""
    config = _load_config(args.config)
    run = dict(DEFAULTS)
    run.update(config)
    for key, value in vars(args).items():
        if key in CONFIG_KEYS and value is not None:
            run[key] = value
    run["command"] = args.command
    run["couplings"] = _couplings(args, config.get("couplings"))
    return run


def _split(text: str) -> list[str]:
    return [part.strip() for part in str(text).split(",") if part.strip()]


def _couplings(args: argparse.Namespace, from_config) -> Couplings | None:
    if getattr(args, "family", None):
        spec: dict[str, Any] = {"family": args.family}
        for name in COUPLING_FLAGS[1:]:
            value = getattr(args, name)
            if value is None:
                continue
            if name in ("t", "head"):
                value = _split(value)
            elif name == "terms":
                value = [_term(part) for part in _split(value)]
            spec[name] = value
        return couplings_from_spec(spec)
    stray = [f"--{n}" for n in COUPLING_FLAGS[1:] if getattr(args, n, None) is not None]
    if stray:
        raise ConfigError(f"{', '.join(stray)} given without --family")
    spec = getattr(args, "couplings", None) or from_config
    return couplings_from_spec(spec) if spec is not None else None


def _term(text: str) -> dict:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"finite_set term {text!r} must look like k:s:phi")
    try:
        return {"k": int(parts[0]), "s": float(parts[1]), "phi": float(parts[2])}
    except ValueError:
        raise ConfigError(f"finite_set term {text!r} must look like k:s:phi") from None


def _need(run: dict, key: str, flag: str) -> Any:
    if run.get(key) is None:
        raise ConfigError(f"{run['command']} needs {flag}")
    return run[key]


def _need_couplings(run: dict) -> Couplings:
    if run["couplings"] is None:
        raise ConfigError(f"{run['command']} needs couplings: use --family ... or --couplings JSON")
    return run["couplings"]


def _positive(run: dict, key: str, flag: str) -> int:
    value = _need(run, key, flag)
    if not isinstance(value, int) or value < 1:
        raise ConfigError(f"{flag} must be a positive integer, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# commands; each returns (text, exit status)
# ---------------------------------------------------------------------------


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n"


def _jsonl(rows) -> str:
    return "".join(_json(row) for row in rows)


def _tree(run: dict) -> GrowthTree:
    cap = run["cap"]
    if not isinstance(cap, int) or cap < 1:
        raise ConfigError(f"--cap must be a positive integer, got {cap!r}")
    return GrowthTree(cap)


def _engine(run: dict) -> MeasureEngine:
    return MeasureEngine(_need_couplings(run), _tree(run), run["precision"])


def cmd_enum(run: dict) -> tuple[str, int]:
    n = _positive(run, "n", "--n")
    cat = _tree(run).level(n)
    rows = list(cat.export_rows())
    if run["format"] == "json":
        return _jsonl(rows), EXIT_OK
    return _csv(
        ["n", "index", "parent", "past", "iso_key"],
        ([r["n"], r["index"], r["parent"], json.dumps(r["past"], separators=(",", ":")), r["iso_key"]] for r in rows),
    ), EXIT_OK


def cmd_measure(run: dict) -> tuple[str, int]:
    n = _positive(run, "n", "--n")
    engine = _engine(run)
    cat = engine.tree.level(n)
    if run["event"] is not None:
        try:
            members = [int(i) for i in _split(run["event"])] if isinstance(run["event"], str) else list(run["event"])
        except ValueError:
            raise ConfigError(f"--event must be comma separated node indices, got {run['event']!r}") from None
        event = Event(n, members)
        z = complex(engine.event_measure(event))
        row = {"n": n, "members": sorted(event.members), "re_measure": z.real, "im_measure": z.imag, "abs_measure": abs(z)}
        if run["format"] == "json":
            return _json(row), EXIT_OK
        members_text = " ".join(str(i) for i in row["members"])
        return _csv(list(row), [[n, members_text, z.real, z.imag, abs(z)]]), EXIT_OK
    keys = cat.iso_class
    rows = []
    for i, m in enumerate(engine.measures(n)):
        z = complex(m)
        rows.append({"n": n, "index": i, "iso_key": keys[i].hex(), "re_measure": z.real, "im_measure": z.imag,
                     "abs_measure": abs(z)})
    if run["format"] == "json":
        return _jsonl(rows), EXIT_OK
    return _csv(list(rows[0]), (list(r.values()) for r in rows)), EXIT_OK


def cmd_zeta(run: dict) -> tuple[str, int]:
    n_max = _positive(run, "n_max", "--n-max")
    engine = _engine(run)
    if run["format"] == "json":
        levels = []
        for n in range(1, n_max + 1):
            levels.append(engine.level_zeta(n).summary(engine.tree.level(n).chain_index))
        return _jsonl(levels), EXIT_OK
    rows = []
    for n in range(1, n_max + 1):
        cat = engine.tree.level(n)
        zeta = engine.zeta(n)
        keys = cat.iso_class
        for i, m in enumerate(engine.measures(n)):
            z = complex(m)
            rows.append([n, i, keys[i].hex(), float(zeta[i]), abs(z), z.real, z.imag])
    header = ["n", "node_index", "iso_key", "zeta", "abs_measure", "re_measure", "im_measure"]
    return _csv(header, rows), EXIT_OK


def _window(value) -> tuple[int, int]:
    parts = _split(value) if isinstance(value, str) else list(value)
    try:
        lo, hi = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--window must be two integers a,b, got {value!r}") from None
    return lo, hi


def cmd_classify(run: dict) -> tuple[str, int]:
    c = _need_couplings(run)
    try:
        opts = ClassifyOptions(
            window=_window(run["window"]),
            margin=float(run["margin"]),
            evidence=True if run["evidence"] else None,
            precision=run["precision"],
        )
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    verdict = classify(c, opts)
    status = EXIT_INCONCLUSIVE if run["strict"] and verdict.status is Status.INCONCLUSIVE else EXIT_OK
    out = verdict.to_json()
    if run["format"] == "json":
        return _json(out), status
    ev = out["evidence"]
    lo, hi = ev["n_window"] or [None, None]
    header = ["status", "basis", "n_window_lo", "n_window_hi", "fitted_x_a", "fitted_x_c", "U_a_tail", "U_c_tail"]
    row = [out["status"], out["basis"], lo, hi, ev["fitted_x_a"], ev["fitted_x_c"], ev["U_a_tail"], ev["U_c_tail"]]
    return _csv(header, [["" if v is None else v for v in row]]), status


def cmd_orig(run: dict) -> tuple[str, int]:
    c = _need_couplings(run)
    n_max = run["n_max"] if run["n_max"] is not None else 500
    if not isinstance(n_max, int) or n_max < 1:
        raise ConfigError(f"--n-max must be a positive integer, got {n_max!r}")
    state = originary_measure(c, n_max=n_max, tol=float(run["tol"]))
    out = state.to_json()
    if run["format"] == "json":
        return _json(out), EXIT_OK
    return _csv(list(out), [list(out.values())]), EXIT_OK


def cmd_sample(run: dict) -> tuple[str, int]:
    c = _need_couplings(run)
    n = _positive(run, "n", "--n")
    seed = run["seed"]
    if not isinstance(seed, int):
        raise ConfigError(f"--seed must be an integer, got {seed!r}")
    cfg = SampleConfig(c, n, int(run["count"]), seed)
    threads = run["threads"]
    if run["format"] == "json":
        rows = []
        for i, s in enumerate(sample_many(cfg, threads)):
            past = [[b for b in range(n) if r >> b & 1] for r in s.past]
            rows.append({"n": n, "index": i, "parent": None, "past": past, "iso_key": canonical_form(s).hex()})
        return _jsonl(rows), EXIT_OK
    tree = _tree(run)
    cat = tree.level(n)
    counts = empirical_counts(cfg, n, threads, tree)
    exact = MeasureEngine(c, tree).measures(n)
    keys = cat.iso_class
    total = max(int(counts.sum()), 1)
    rows = [[i, keys[i].hex(), int(counts[i]), counts[i] / total, complex(exact[i]).real] for i in range(len(cat))]
    return _csv(["index", "iso_key", "count", "frequency", "probability"], rows), EXIT_OK


COMMANDS: dict[str, Callable[[dict], tuple[str, int]]] = {
    "enum": cmd_enum,
    "measure": cmd_measure,
    "zeta": cmd_zeta,
    "classify": cmd_classify,
    "orig": cmd_orig,
    "sample": cmd_sample,
}


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        Path(out).write_text(text, newline="\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {out!r}: {exc.strerror}") from None


def run(argv: list[str] | None = None) -> int:
    """Execute one command line and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = resolve(args)
        if config["threads"] is None:
            config["threads"] = os.cpu_count() or 1
        text, status = COMMANDS[args.command](config)
        _emit(text, config["out"])
        return status
    except (ConfigError, ContractError, CapExceeded, UnsupportedDynamics) as exc:
        print(f"csgrowth: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateDynamics as exc:
        print(f"csgrowth: error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConsistencyError as exc:
        print(f"csgrowth: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
