"""HTTP service exposing the check suites.

POST a RunConfig (JSON body) to /suites/{verify,contraction,resolvent,
evolve}; the response carries the exit code, the reports, and every output
file as a named text blob, so a thin client can reproduce exactly what an
in-process run would have written. Configuration problems (including
non-summable series setups) come back as 422 with a detail message.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .config import RunConfig
from .errors import ConfigError
from .reports import CheckReport
from .suites import RUNNERS, SuiteOutcome

app = FastAPI(title="semipert", version=__version__)


class RecordModel(BaseModel):
    name: str
    n: float | None
    t: float | None
    residual: float
    bound: float
    passed: bool


class ReportModel(BaseModel):
    title: str
    passed: bool
    meta: dict
    records: list[RecordModel]


class SuiteResponse(BaseModel):
    suite: str
    exit_code: int
    passed: bool
    reports: list[ReportModel]
    files: dict[str, str]


def _report_model(report: CheckReport) -> ReportModel:
    data = report.to_dict()
    return ReportModel(
        title=data["title"],
        passed=data["passed"],
        meta=data["meta"],
        records=[
            RecordModel(name=r["name"], n=r["n"], t=r["t"],
                        residual=r["residual"], bound=r["bound"], passed=r["pass"])
            for r in data["records"]
        ],
    )


def _respond(outcome: SuiteOutcome) -> SuiteResponse:
    return SuiteResponse(
        suite=outcome.suite,
        exit_code=outcome.exit_code,
        passed=outcome.passed,
        reports=[_report_model(r) for r in outcome.reports],
        files=outcome.files,
    )


def _run(name: str, cfg: RunConfig) -> SuiteResponse:
    try:
        return _respond(RUNNERS[name](cfg))
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/config/defaults")
def config_defaults() -> RunConfig:
    return RunConfig()


@app.post("/suites/verify", response_model=SuiteResponse)
def suite_verify(cfg: RunConfig) -> SuiteResponse:
    return _run("verify", cfg)


@app.post("/suites/contraction", response_model=SuiteResponse)
def suite_contraction(cfg: RunConfig) -> SuiteResponse:
    return _run("contraction", cfg)


@app.post("/suites/resolvent", response_model=SuiteResponse)
def suite_resolvent(cfg: RunConfig) -> SuiteResponse:
    return _run("resolvent", cfg)


@app.post("/suites/evolve", response_model=SuiteResponse)
def suite_evolve(cfg: RunConfig) -> SuiteResponse:
    return _run("evolve", cfg)
