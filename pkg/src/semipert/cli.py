"""Command line interface.

Subcommands verify, contraction, resolvent, evolve run a suite and write
its output files under --out. By default they run in process; with
--server URL they post the same config to a running service and write the
returned files, so both modes produce identical trees. Exit codes: 0 all
checks passed, 1 at least one check failed, 2 configuration error.

`semipert serve` starts the HTTP service.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError
from .suites import RUNNERS, SuiteOutcome

SUITES = ("verify", "contraction", "resolvent", "evolve")


def _add_suite_parser(sub, name: str, help_text: str) -> None:
    sp = sub.add_parser(name, help=help_text)
    sp.add_argument("--config", type=Path, default=None,
                    help="JSON file with RunConfig fields")
    sp.add_argument("--out", type=Path, default=Path("out"),
                    help="directory for output files (default: ./out)")
    sp.add_argument("--seed", type=int, default=None, help="battery seed")
    sp.add_argument("--refine", type=int, default=None,
                    help="number of refinement halvings")
    sp.add_argument("--threshold", type=float, default=None,
                    help="pass gate for the evolve comparison")
    sp.add_argument("--kernel", type=str, default=None,
                    help="kernel preset (zero|uniform|bump) or CSV path")
    sp.add_argument("--t0", type=float, default=None, help="series horizon")
    sp.add_argument("--t-final", dest="t_final", type=float, default=None,
                    help="evolution horizon")
    sp.add_argument("--h-t", dest="h_t", type=float, default=None,
                    help="time step (multiple of h_s)")
    sp.add_argument("--h-s", dest="h_s", type=float, default=None,
                    help="space step")
    sp.add_argument("--tol", type=float, default=None,
                    help="series / iteration tolerance")
    sp.add_argument("--max-terms", dest="max_terms", type=int, default=None,
                    help="series term cap")
    sp.add_argument("--server", type=str, default=None,
                    help="base URL of a running service; run there instead")


def _write_files(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out_dir / name).write_text(content)


def _print_outcome(suite: str, reports, exit_code: int, out_dir: Path) -> None:
    for rep in reports:
        title = rep["title"] if isinstance(rep, dict) else rep.title
        records = rep["records"] if isinstance(rep, dict) else [
            {"name": r.name, "residual": r.residual, "bound": r.bound,
             "pass": r.passed} for r in rep.records]
        ok = all(r["pass"] for r in records)
        verdict = "PASS" if ok else "FAIL"
        print(f"{title}: {verdict} ({len(records)} checks)")
        if not ok:
            for r in records:
                if not r["pass"]:
                    print(f"  FAIL {r['name']}: residual={r['residual']!r} "
                          f"bound={r['bound']!r}")
    status = "PASS" if exit_code == 0 else "FAIL"
    print(f"suite {suite}: {status} (exit {exit_code}); files in {out_dir}")


def _run_remote(suite: str, server: str, cfg_payload: dict, out_dir: Path) -> int:
    import httpx

    url = server.rstrip("/") + f"/suites/{suite}"
    try:
        resp = httpx.post(url, json=cfg_payload, timeout=600.0)
    except httpx.HTTPError as exc:
        print(f"server error: {exc}", file=sys.stderr)
        return 2
    if resp.status_code == 422:
        try:
            detail = resp.json().get("detail", resp.text)
        except json.JSONDecodeError:
            detail = resp.text
        print(f"config error: {detail}", file=sys.stderr)
        return 2
    if resp.status_code != 200:
        print(f"server returned {resp.status_code}: {resp.text}", file=sys.stderr)
        return 2
    body = resp.json()
    _write_files(out_dir, body["files"])
    reports = [
        {"title": rep["title"],
         "records": [{"name": r["name"], "residual": r["residual"],
                      "bound": r["bound"], "pass": r["passed"]}
                     for r in rep["records"]]}
        for rep in body["reports"]
    ]
    _print_outcome(suite, reports, body["exit_code"], out_dir)
    return int(body["exit_code"])


def _run_suite(args: argparse.Namespace) -> int:
    overrides = {
        "seed": args.seed,
        "refine": args.refine,
        "threshold": args.threshold,
        "kernel": args.kernel,
        "t0": args.t0,
        "t_final": args.t_final,
        "h_t": args.h_t,
        "h_s": args.h_s,
        "tol": args.tol,
        "max_terms": args.max_terms,
    }
    cfg = load_config(args.config, overrides)
    if args.server:
        return _run_remote(args.suite, args.server, cfg.model_dump(mode="json"),
                           args.out)
    outcome: SuiteOutcome = RUNNERS[args.suite](cfg)
    _write_files(args.out, outcome.files)
    _print_outcome(outcome.suite, outcome.reports, outcome.exit_code, args.out)
    return outcome.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semipert",
        description="Desk-scale checks for boundary-feedback shift semigroups",
    )
    sub = parser.add_subparsers(dest="suite", required=True)
    _add_suite_parser(sub, "verify",
                      "semigroup axioms, contraction, resolvent identities")
    _add_suite_parser(sub, "contraction",
                      "observed one-step contraction vs the analytic factor")
    _add_suite_parser(sub, "resolvent",
                      "series diagnostics and the two-route crosscheck")
    _add_suite_parser(sub, "evolve",
                      "Picard evolution vs the characteristics oracle")
    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.suite == "serve":
        import uvicorn

        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        return _run_suite(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
