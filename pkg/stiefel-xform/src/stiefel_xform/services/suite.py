import json
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

from stiefel_xform.core.config import get_settings
from stiefel_xform.core.exceptions import ConfigError
from stiefel_xform.core.logging import get_logger
from stiefel_xform.schemas.identity import IdentityParams, IdentityReport, Verdict
from stiefel_xform.schemas.mc import MCConfig, MCEstimate
from stiefel_xform.services.identities import CATALOG, verify


logger = get_logger(__name__)

PROFILES = ("smoke", "full")
Job = Tuple[str, IdentityParams]


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _ensure_reports_dir() -> str:
    settings = get_settings()
    os.makedirs(settings.reports_dir, exist_ok=True)
    return settings.reports_dir


def _run_path(run_id: str) -> str:
    reports_dir = _ensure_reports_dir()
    return os.path.join(reports_dir, f"{run_id}.json")


def run_id_for(profile: str, cfg: MCConfig) -> str:
    return f"suite-{profile}-seed{cfg.seed}-shards{cfg.shards}"


def profile_config(profile: str, cfg: MCConfig) -> MCConfig:
    if profile not in PROFILES:
        raise ConfigError(f"unknown suite profile {profile!r}; use smoke or full")
    if profile == "full":
        return cfg
    settings = get_settings()
    return cfg.model_copy(update={
        "samples": settings.smoke_samples,
        "n_outer": settings.smoke_outer,
        "n_inner": settings.smoke_inner,
    })


def suite_grid() -> List[Job]:
    """Default parameters plus the extra grid points of every fixture, ordered by id."""
    jobs: List[Job] = []
    for identity_id in sorted(CATALOG):
        fixture = CATALOG[identity_id]
        jobs.append((identity_id, fixture.defaults))
        jobs.extend((identity_id, params) for params in fixture.grid)
    return jobs


def _failed_report(identity_id: str, params: IdentityParams, cfg: MCConfig,
                   error: Exception) -> IdentityReport:
    placeholder = MCEstimate.exact(0.0, seed=cfg.seed)
    return IdentityReport(
        id=identity_id,
        params=params.model_dump(exclude_none=True, mode="json"),
        lhs=placeholder,
        rhs=placeholder,
        z_score=0.0,
        verdict=Verdict.failed,
        seed=cfg.seed,
        error=f"{type(error).__name__}: {error}",
    )


def run_fixture(job: Job, cfg: MCConfig, timings: bool = False) -> IdentityReport:
    identity_id, params = job
    try:
        return verify(identity_id, params, cfg, timings=timings)
    except Exception as exc:
        logger.exception("Fixture %s failed: %s", identity_id, exc)
        return _failed_report(identity_id, params, cfg, exc)


def run_suite(profile: str, cfg: MCConfig, jobs: int = 1,
              timings: bool = False) -> List[IdentityReport]:
    cfg = profile_config(profile, cfg)
    grid = suite_grid()
    logger.info("Running %s suite: %d fixture runs, seed %d", profile, len(grid), cfg.seed)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda job: run_fixture(job, cfg, timings), grid))
    return [run_fixture(job, cfg, timings) for job in grid]


def verdict_counts(reports: List[IdentityReport]) -> Dict[str, int]:
    counts = {verdict.value: 0 for verdict in Verdict}
    for report in reports:
        counts[report.verdict.value] += 1
    counts["count"] = len(reports)
    return counts


def create_run(profile: str, cfg: MCConfig) -> str:
    run_id = run_id_for(profile, cfg)
    payload = {
        "run_id": run_id,
        "profile": profile,
        "status": "running",
        "started_at": _now_iso(),
        "finished_at": None,
        "config": cfg.model_dump(),
        "counts": {},
        "reports": [],
        "error": None,
    }
    write_run(run_id, payload)
    return run_id


def read_run(run_id: str) -> Dict:
    run_path = _run_path(run_id)
    if not os.path.exists(run_path):
        raise FileNotFoundError(f"Run not found: {run_id}")
    with open(run_path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def write_run(run_id: str, payload: Dict) -> None:
    run_path = _run_path(run_id)
    with open(run_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, indent=2)


def execute_run(run_id: str, jobs: int = 1,
                timings: bool = False) -> Optional[List[IdentityReport]]:
    """Run a created suite and persist the reports; returns None when the run failed."""
    run_data = read_run(run_id)
    try:
        cfg = MCConfig(**run_data["config"])
        reports = run_suite(run_data["profile"], cfg, jobs=jobs, timings=timings)
        completed = {
            **run_data,
            "status": "completed",
            "finished_at": _now_iso(),
            "counts": verdict_counts(reports),
            "reports": [report.model_dump(mode="json") for report in reports],
        }
        write_run(run_id, completed)
        return reports
    except Exception as exc:
        logger.exception("Suite run failed: %s", exc)
        run_data.update(
            {
                "status": "failed",
                "finished_at": _now_iso(),
                "error": str(exc),
            }
        )
        write_run(run_id, run_data)
        return None
