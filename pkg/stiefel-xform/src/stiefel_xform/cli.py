"""Command-line front end.

Exit codes: 0 every verdict pass (or inconclusive), 1 any fail,
2 constant-mismatch without a fail, 3 usage, configuration or domain error.
"""
import functools
import json
from datetime import datetime, timezone
from typing import Iterable, List, Optional, Sequence, Tuple

import click
from pydantic import ValidationError

from stiefel_xform import __version__
from stiefel_xform.core.config import get_settings
from stiefel_xform.core.exceptions import ConfigError, StiefelXformError
from stiefel_xform.core.logging import configure_logging, get_logger
from stiefel_xform.schemas.constants import ConstantKind, ConstantSpec
from stiefel_xform.schemas.identity import IdentityParams, IdentityReport
from stiefel_xform.schemas.mc import MCConfig
from stiefel_xform.schemas.report import (
    Command,
    EvalResult,
    ExitStatus,
    OutputFormat,
    ReportEnvelope,
    RunConfig,
    SuiteSummary,
    exit_status,
)
from stiefel_xform.services import identities, special, suite
from stiefel_xform.services.fields import make_field
from stiefel_xform.services.manifold import RandomSource, haar_frames
from stiefel_xform.services.transforms import (
    NORMALIZERS,
    Transform,
    TransformKind,
    evaluate,
    normalizer,
)

logger = get_logger(__name__)

USAGE_EXIT = int(ExitStatus.usage)


class _UsageExit:
    """Maps click usage errors to exit code 3."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = USAGE_EXIT
            raise


class XformCommand(_UsageExit, click.Command):
    pass


class XformGroup(_UsageExit, click.Group):
    command_class = XformCommand

    def resolve_command(self, ctx, args):
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError as exc:
            exc.exit_code = USAGE_EXIT
            raise


def _parse_lam(ctx, param, value: Optional[str]) -> Optional[Tuple[float, ...]]:
    if value is None:
        return None
    try:
        return tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated reals, got {value!r}") from None


def identity_options(fn):
    options = [
        click.option("--n", type=int, default=None, help="Ambient dimension."),
        click.option("--m", type=int, default=None, help="Frame width of the field."),
        click.option("--k", type=int, default=None, help="Width of the other frame."),
        click.option("--alpha", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--lam", callback=_parse_lam, default=None, help="e.g. 1.5,0.5"),
        click.option("--field", default=None, help="Field spec, e.g. minor-power:p=1."),
        click.option("--field2", default=None, help="Second field for two-field fixtures."),
        click.option("--point", type=int, default=None, help="Seed index of the evaluation point."),
        click.option("--points", type=int, default=None, help="Number of evaluation points."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def mc_options(fn):
    options = [
        click.option("--samples", type=int, default=None),
        click.option("--seed", type=int, default=None, help="Defaults to STIEFEL_XFORM_SEED."),
        click.option("--shards", type=int, default=None),
        click.option("--threads", type=int, default=None),
        click.option("--n-outer", "n_outer", type=int, default=None),
        click.option("--n-inner", "n_inner", type=int, default=None),
        click.option("--z-tol", "z_tol", type=float, default=None),
        click.option("--abs-tol", "abs_tol", type=float, default=None),
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="JSON file with an MCConfig payload."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def output_options(fn):
    options = [
        click.option("--json/--text", "as_json", default=True),
        click.option("--out", type=click.Path(dir_okay=False), default=None),
        click.option("--no-timestamp", is_flag=True, default=False),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def guarded(fn):
    """Domain and validation errors become exit code 3 without a traceback."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (StiefelXformError, ValidationError, OSError, json.JSONDecodeError) as exc:
            logger.debug("Command failed", exc_info=True)
            if isinstance(exc, ValidationError):
                exc = ConfigError(str(exc))
            click.echo(f"error: {exc}", err=True)
            raise click.exceptions.Exit(USAGE_EXIT)

    return wrapper


def build_mc_config(config_path: Optional[str] = None, **overrides) -> MCConfig:
    payload = MCConfig.from_settings().model_dump()
    if config_path:
        with open(config_path, "r", encoding="utf-8") as handle:
            payload.update(json.load(handle))
    payload.update({key: value for key, value in overrides.items() if value is not None})
    return MCConfig.model_validate(payload)


def _identity_params(**values) -> IdentityParams:
    return IdentityParams(**{key: value for key, value in values.items() if value is not None})


def _timestamp(skip: bool) -> Optional[str]:
    return None if skip else datetime.now(timezone.utc).isoformat()


def _format_report(report) -> List[str]:
    if isinstance(report, EvalResult):
        lines = [f"{report.transform} {report.field} mean={report.estimate.mean!r} "
                 f"se={report.estimate.se!r} samples={report.estimate.samples}"]
        if report.normalized is not None:
            lines.append(f"  normalized mean={report.normalized.mean!r} "
                         f"se={report.normalized.se!r}")
        return lines
    lines = [
        f"{report.id} {report.verdict.value} z={report.z_score!r}",
        f"  lhs={report.lhs.mean!r} se={report.lhs.se!r}",
        f"  rhs={report.rhs.mean!r} se={report.rhs.se!r}",
        f"  constant={report.constant_paper!r}",
    ]
    fit = report.constant_empirical
    if fit is not None:
        lines.append(f"  fitted={fit.value!r} se={fit.se!r} ci=[{fit.ci_low!r}, {fit.ci_high!r}] "
                     f"ratio={fit.ratio_to_paper!r} proportional={fit.proportional}")
    if report.error:
        lines.append(f"  error={report.error}")
    return lines


def render(envelope: ReportEnvelope, as_json: bool) -> str:
    if as_json:
        return envelope.model_dump_json(indent=2)
    lines = [f"stiefel-xform {envelope.version} schema {envelope.schema_version}"]
    if envelope.timestamp:
        lines.append(f"timestamp {envelope.timestamp}")
    for report in envelope.reports:
        lines.extend(_format_report(report))
    if envelope.summary is not None:
        counts = " ".join(f"{key}={value}" for key, value in envelope.summary.counts.items())
        lines.append(f"run {envelope.summary.run_id} {envelope.summary.status} {counts}")
    lines.append(f"exit_status={int(envelope.exit_status)}")
    return "\n".join(lines)


def emit(envelope: ReportEnvelope, as_json: bool, out: Optional[str]) -> None:
    text = render(envelope, as_json)
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        click.echo(text)


def _envelope(run_config: RunConfig, reports: Sequence, status: ExitStatus,
              no_timestamp: bool, summary: Optional[SuiteSummary] = None) -> ReportEnvelope:
    return ReportEnvelope(
        version=__version__,
        timestamp=_timestamp(no_timestamp),
        config=run_config.model_dump(mode="json", exclude_none=True),
        reports=list(reports),
        summary=summary,
        exit_status=status,
    )


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, ensure_ascii=False, indent=2))


@click.group(cls=XformGroup)
@click.version_option(__version__, prog_name="stiefel-xform")
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR.")
@click.option("-v", "--verbose", is_flag=True, default=False, help="Shorthand for DEBUG.")
def main(log_level: Optional[str], verbose: bool) -> None:
    """Monte Carlo transforms on Stiefel manifolds and checks of their identities."""
    configure_logging("DEBUG" if verbose else log_level)


@main.command("list")
@click.option("--json/--text", "as_json", default=False)
def list_command(as_json: bool) -> int:
    """Print the identity catalog."""
    catalog = identities.list_identities()
    if as_json:
        _echo_json(identities.export_catalog())
    else:
        for info in catalog:
            constant = f" [{info.constant}]" if info.constant else ""
            click.echo(f"{info.id}  {info.anchor}{constant}")
    return 0


@main.command("list-constants")
@click.option("--json/--text", "as_json", default=False)
def list_constants_command(as_json: bool) -> int:
    """Print the constant registry."""
    infos = special.list_constants()
    if as_json:
        _echo_json([info.model_dump() for info in infos])
    else:
        for info in infos:
            click.echo(f"{info.kind}({', '.join(info.params)}) = {info.formula}")
    return 0


@main.command("constant")
@click.argument("kind", type=click.Choice([kind.value for kind in ConstantKind]))
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--k", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--strict", is_flag=True, default=False, help="Hypothesis violations are errors.")
@click.option("--json/--text", "as_json", default=False)
@guarded
def constant_command(kind: str, n: int, m: int, k: Optional[int], alpha: Optional[float],
                     strict: bool, as_json: bool) -> int:
    """Evaluate one registry constant."""
    spec = ConstantSpec(kind=kind, n=n, m=m, k=k, alpha=alpha)
    value = special.paper_constant(spec, strict=strict)
    if as_json:
        _echo_json({"kind": kind, "params": spec.model_dump(mode="json", exclude_none=True),
                    "value": value})
    else:
        click.echo(repr(value))
    return 0


def _run_identity(command: Command, identity_id: str, params: IdentityParams, cfg: MCConfig,
                  timings: bool) -> IdentityReport:
    return identities.verify(identity_id, params, cfg, timings=timings,
                             audit=command is Command.audit)


_IDENTITY_HELP = {
    Command.verify: "Estimate both sides of one or more identities.",
    Command.audit: "Verify identities and fit their constants empirically.",
}


def _identity_command(command: Command):
    @main.command(command.value, help=_IDENTITY_HELP[command])
    @click.argument("identity_ids", nargs=-1, required=True)
    @identity_options
    @mc_options
    @output_options
    @click.option("--timings", is_flag=True, default=False, help="Include runtime_ms.")
    @click.pass_context
    @guarded
    def run_command(ctx, identity_ids, n, m, k, alpha, beta, lam, field, field2, point, points,
                    samples, seed, shards, threads, n_outer, n_inner, z_tol, abs_tol,
                    config_path, as_json, out, no_timestamp, timings):
        cfg = build_mc_config(config_path, samples=samples, seed=seed, shards=shards,
                              threads=threads, n_outer=n_outer, n_inner=n_inner, z_tol=z_tol,
                              abs_tol=abs_tol)
        params = _identity_params(n=n, m=m, k=k, alpha=alpha, beta=beta, lam=lam, field=field,
                                  field2=field2, point=point, points=points)
        run_config = RunConfig(command=command, ids=list(identity_ids), n=n, m=m, k=k,
                               alpha=alpha, lam=lam, field=field, mc=cfg, out=out,
                               format=OutputFormat.json if as_json else OutputFormat.text)
        reports = [_run_identity(command, identity_id, params, cfg, timings)
                   for identity_id in identity_ids]
        status = exit_status([report.verdict for report in reports])
        emit(_envelope(run_config, reports, status, no_timestamp), as_json, out)
        ctx.exit(int(status))

    return run_command


verify_command = _identity_command(Command.verify)
audit_command = _identity_command(Command.audit)


@main.command("eval")
@click.argument("kind", type=click.Choice([kind.value for kind in TransformKind]))
@identity_options
@mc_options
@output_options
@click.option("--mode", type=click.Choice(["direct", "complement"]), default="direct")
@click.option("--normalized", is_flag=True, default=False,
              help="Also report the normalized transform.")
@click.pass_context
@guarded
def eval_command(ctx, kind, n, m, k, alpha, beta, lam, field, field2, point, points, samples,
                 seed, shards, threads, n_outer, n_inner, z_tol, abs_tol, config_path, as_json,
                 out, no_timestamp, mode, normalized):
    """Evaluate one transform of a field at a seeded random point."""
    cfg = build_mc_config(config_path, samples=samples, seed=seed, shards=shards,
                          threads=threads, n_outer=n_outer, n_inner=n_inner, z_tol=z_tol,
                          abs_tol=abs_tol)
    run_config = RunConfig(command=Command.eval, transform=kind, n=n, m=m, k=k, alpha=alpha,
                           lam=lam, field=field, mc=cfg, out=out,
                           format=OutputFormat.json if as_json else OutputFormat.text)
    if n is None or m is None:
        raise ConfigError("eval requires --n and --m")
    transform_kind = TransformKind(kind)
    if transform_kind in (TransformKind.mcos, TransformKind.qsin):
        k = m
    elif k is None:
        raise ConfigError(f"{kind} requires --k")
    transform = Transform(transform_kind, n, m, k, alpha=alpha, lam=lam, mode=mode)
    f = make_field(field, n, transform.field_cols)
    index = point or 0
    x = haar_frames(n, transform.point_cols,
                    RandomSource(cfg.seed).spawn("eval-point", index).generator())
    estimate = evaluate(transform, f, x, cfg, source=RandomSource(cfg.seed).spawn("eval", kind))
    scaled = None
    if normalized:
        if transform_kind not in NORMALIZERS:
            raise ConfigError(f"{kind} has no normalizing coefficient")
        scaled = estimate.scaled(normalizer(transform))
    params = {"n": n, "m": m, "k": k, "alpha": alpha, "lam": list(lam) if lam else None,
              "point": index, "mode": mode}
    result = EvalResult(transform=kind, field=f.name,
                        params={key: value for key, value in params.items() if value is not None},
                        estimate=estimate, normalized=scaled)
    emit(_envelope(run_config, [result], ExitStatus.passed, no_timestamp), as_json, out)
    return 0


@main.command("suite")
@click.option("--profile", type=click.Choice(suite.PROFILES), default="smoke")
@mc_options
@click.option("--jobs", type=int, default=None, help="Fixtures run in parallel.")
@click.option("--json/--text", "as_json", default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--timestamp/--no-timestamp", "with_timestamp", default=False)
@click.option("--timings", is_flag=True, default=False, help="Include runtime_ms.")
@click.option("--save", is_flag=True, default=False, help="Persist the run under reports_dir.")
@click.pass_context
@guarded
def suite_command(ctx, profile, samples, seed, shards, threads, n_outer, n_inner, z_tol, abs_tol,
                  config_path, jobs, as_json, out, with_timestamp, timings, save):
    """Run the default grid of every fixture."""
    cfg = build_mc_config(config_path, samples=samples, seed=seed, shards=shards,
                          threads=threads, n_outer=n_outer, n_inner=n_inner, z_tol=z_tol,
                          abs_tol=abs_tol)
    jobs = jobs if jobs is not None else get_settings().jobs
    if jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    run_config = RunConfig(command=Command.suite, profile=profile, mc=cfg, out=out,
                           format=OutputFormat.json if as_json else OutputFormat.text)
    run_id = suite.run_id_for(profile, cfg)
    if save:
        suite.create_run(profile, cfg)
        reports = suite.execute_run(run_id, jobs=jobs, timings=timings)
        if reports is None:
            raise ConfigError(suite.read_run(run_id)["error"])
    else:
        reports = suite.run_suite(profile, cfg, jobs=jobs, timings=timings)
    status = exit_status([report.verdict for report in reports])
    summary = SuiteSummary(run_id=run_id, profile=profile, status="completed",
                           counts=suite.verdict_counts(reports))
    emit(_envelope(run_config, reports, status, not with_timestamp, summary), as_json, out)
    ctx.exit(int(status))


@main.command("schema")
def schema_command() -> int:
    """Print the JSON schema of the report envelope."""
    _echo_json(ReportEnvelope.model_json_schema())
    return 0


def run(argv: Optional[Iterable[str]] = None) -> int:
    try:
        result = main.main(args=list(argv) if argv is not None else None,
                           prog_name="stiefel-xform", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return USAGE_EXIT
    return int(result or 0)
