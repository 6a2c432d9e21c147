# src/ks_glimm/cli.py
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from ks_glimm import __version__
from ks_glimm.config import RunConfig, apply_overrides, load_config, serialize_config
from ks_glimm.db.duckdb_store import ResultsStore
from ks_glimm.errors import EXIT_OK, KSGlimmError, exit_code_for
from ks_glimm.experiments import COMMANDS, RUNNERS, Outcome, run_id_for
from ks_glimm.logging_setup import configure_logging
from ks_glimm.util.ids import failed_run_id
from ks_glimm.util.paths import resolve_data_root

logger = logging.getLogger("ks_glimm.cli")


def _fmt_number(x: float | None) -> str:
    """
    Formatting rules:
      - Round to 6 significant decimals first
      - Strip trailing zeros (and trailing decimal point)
      - Any non-zero |x| < 0.001 uses scientific notation
    """
    if x is None:
        return ""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"

    y = round(float(x), 6)
    if y != 0.0 and abs(x) < 1e-3:
        mantissa, exp = f"{x:.6e}".split("e", 1)
        mantissa = mantissa.rstrip("0").rstrip(".")
        sign = exp[0]
        digits = exp[1:].lstrip("0") or "0"
        return f"{mantissa}e{sign + digits if sign == '-' else digits}"
    if y == 0.0 and x != 0.0:
        return f"{x:.3e}"

    s = f"{y:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _fmt_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_number(v)
    return str(v)


def _format_table(rows: list[dict[str, Any]], columns: list[tuple[str, str]]) -> str:
    table = [[_fmt_cell(r.get(k)) for k, _ in columns] for r in rows]
    headers = [h for _, h in columns]
    widths = [max(len(v) for v in [headers[j], *[row[j] for row in table]]) for j in range(len(columns))]

    def fmt_row(vals: list[str]) -> str:
        return " | ".join(v.ljust(widths[i]) for i, v in enumerate(vals))

    out_lines = [fmt_row(headers), "-+-".join("-" * w for w in widths)]
    out_lines += [fmt_row(r) for r in table]
    return "\n".join(out_lines)


def _print_outcome(out: Outcome) -> None:
    print(f"{out.command} run_id={out.run_id}")
    s = out.summary
    if out.data is not None:
        print(f"delta={_fmt_number(out.data.delta)} sigma={_fmt_number(out.data.sigma)} M={_fmt_number(out.data.M)}")
    if out.command in ("simulate", "decay"):
        print(f"strips={out.n_strips} mass_drift={_fmt_number(s['mass_drift'])} TV_final={_fmt_number(s['TV_final'])}")
    if out.fits:
        rows = [{"series": k, **{f: getattr(v, f) for f in ("exponent", "prefactor", "residual", "accepted")}} for k, v in out.fits.items()]
        print(_format_table(rows, [("series", "Series"), ("exponent", "Exponent"), ("prefactor", "Prefactor"), ("residual", "Residual"), ("accepted", "Accepted")]))
    if out.convergence is not None:
        rows = out.convergence.to_dict(orient="records")
        print(_format_table(rows, [("h", "h"), ("quantity", "Quantity"), ("value", "Value"), ("ratio", "Ratio")]))
    if out.command == "riemann":
        g = s["gamma"]
        print(f"gamma=({_fmt_number(float(g[0]))}, {_fmt_number(float(g[1]))})")
    for p in out.files:
        print(f"Wrote {p}")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = apply_overrides(cfg, args.set or [])
    if args.seed is not None:
        cfg = apply_overrides(cfg, [f"sampling.seed={args.seed}"])
    if args.out is not None:
        cfg = replace(cfg, output=replace(cfg.output, dir=str(args.out)))
    return cfg


def _out_dir(cfg: RunConfig, command: str) -> Path:
    if cfg.output.dir:
        return Path(cfg.output.dir)
    return resolve_data_root().prepare_run_dir(run_id_for(command, cfg))


def _record(store: ResultsStore, cmd: str, cfg: RunConfig | None, out: Outcome | None, code: int, message: str) -> None:
    text = serialize_config(cfg) if cfg is not None else ""
    run_id = out.run_id if out is not None else (run_id_for(cmd, cfg) if cfg is not None else failed_run_id(cmd))
    data = out.data if out is not None else None
    store.record_run(
        run_id,
        command=cmd,
        config_text=text,
        version=__version__,
        status="ok" if code == EXIT_OK else "failed",
        exit_code=code,
        message=message,
        delta=data.delta if data else None,
        sigma=data.sigma if data else None,
        mass=data.M if data else None,
        n_strips=out.n_strips if out is not None else None,
        out_dir=str(out.out_dir) if out is not None else None,
    )
    if out is None:
        return
    if out.diagnostics is not None:
        store.record_diagnostics(run_id, out.diagnostics)
    for series, fit in out.fits.items():
        store.record_fit(run_id, series, fit)
    if out.convergence is not None:
        store.record_convergence(run_id, out.convergence)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="key=value config file.")
    common.add_argument("--set", action="append", default=None, metavar="KEY=VALUE", help="Override one config key (repeatable).")
    common.add_argument("--out", type=Path, default=None, help="Output directory (default: <data>/runs/<run_id>).")
    common.add_argument("--seed", type=int, default=None, help="Shortcut for --set sampling.seed=N.")
    common.add_argument("--quiet", action="store_true", help="Only log warnings and errors.")
    common.add_argument("--db", type=Path, default=None, help="Record the run in this DuckDB results store.")

    ap = argparse.ArgumentParser(prog="ks-glimm", description="Glimm scheme experiments for the hyperbolic Keller-Segel balance law.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)
    helps = {
        "riemann": "Solve one Riemann problem and write the sampled fan.",
        "simulate": "Run the Glimm scheme and write diagnostics and snapshots.",
        "decay": "simulate, then fit decay rates of TV and the L1 distance to the profile.",
        "convergence": "h-refinement sweep: flux mismatch, mass drift, L1 self-differences.",
        "oracle-compare": "Compare the Glimm solution against the Lax-Friedrichs reference.",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(quiet=args.quiet)

    cfg: RunConfig | None = None
    out: Outcome | None = None
    code, message = EXIT_OK, ""
    try:
        cfg = _resolve_config(args)
        out = RUNNERS[args.cmd](cfg, _out_dir(cfg, args.cmd))
        _print_outcome(out)
    except KSGlimmError as e:
        code, message = exit_code_for(e), str(e)
        logger.error("%s failed: %s", args.cmd, e)
        print(f"error: {e}", file=sys.stderr)

    if args.db is not None:
        store = ResultsStore(db_path=args.db)
        store.init_schema()
        _record(store, args.cmd, cfg, out, code, message)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
