import json

import pytest
from pydantic import ValidationError

from stiefel_xform.core.config import Settings
from stiefel_xform.core.exceptions import ConfigError
from stiefel_xform.schemas.identity import IdentityParams, Verdict
from stiefel_xform.schemas.mc import MCConfig, MCEstimate
from stiefel_xform.schemas.report import Command, ExitStatus, RunConfig, exit_status
from stiefel_xform.services import suite


@pytest.mark.parametrize("verdicts, expected", [
    ([], ExitStatus.passed),
    ([Verdict.passed, Verdict.inconclusive], ExitStatus.passed),
    ([Verdict.passed, Verdict.constant_mismatch], ExitStatus.constant_mismatch),
    ([Verdict.constant_mismatch, Verdict.failed], ExitStatus.failed),
    ([Verdict.failed], ExitStatus.failed),
])
def test_exit_status(verdicts, expected):
    """
    Код выхода по набору вердиктов

    Пред-условия: нет
    Шаги:
    1. Вызвать exit_status

    Ожидаемый результат:
    fail важнее constant-mismatch, inconclusive не влияет
    """
    assert exit_status(verdicts) is expected, f"{verdicts} -> {exit_status(verdicts)}"


@pytest.mark.parametrize("payload", [
    {"command": "verify"},
    {"command": "eval", "transform": "cosine"},
    {"command": "suite", "profile": "huge"},
])
def test_run_config_validation(payload):
    """
    Согласованность конфигурации запуска

    Пред-условия: verify без id, eval без поля, неизвестный профиль
    Шаги:
    1. Создать RunConfig

    Ожидаемый результат:
    ValidationError
    """
    with pytest.raises(ValidationError):
        RunConfig(mc=MCConfig(), **payload)


def test_run_config_accepts_verify():
    """
    Корректная конфигурация verify

    Пред-условия: задан id
    Шаги:
    1. Создать RunConfig

    Ожидаемый результат:
    Команда verify со списком id
    """
    config = RunConfig(command="verify", ids=["ID-GTY"], mc=MCConfig())
    assert config.command is Command.verify
    assert config.ids == ["ID-GTY"]


@pytest.mark.parametrize("overrides", [{"samples": 10}, {"shards": 0}, {"z_tol": 0.0},
                                       {"n_outer": 50}])
def test_mc_config_bounds(overrides):
    """
    Границы параметров Монте-Карло

    Пред-условия: значение вне допустимого диапазона
    Шаги:
    1. Создать MCConfig

    Ожидаемый результат:
    ValidationError
    """
    with pytest.raises(ValidationError):
        MCConfig(**overrides)


def test_mc_config_sample_floor():
    """
    Нижняя граница числа выборок

    Пред-условия: нет
    Шаги:
    1. Создать MCConfig с samples = 100 и samples = 99

    Ожидаемый результат:
    100 принимается, 99 даёт ValidationError
    """
    assert MCConfig(samples=100).samples == 100
    with pytest.raises(ValidationError):
        MCConfig(samples=99)


def test_mc_config_from_settings():
    """
    Конфигурация Монте-Карло из настроек

    Пред-условия: Settings с seed 9 и 4 шардами
    Шаги:
    1. Вызвать MCConfig.from_settings с переопределением samples и пустым threads

    Ожидаемый результат:
    seed и shards из настроек, samples из переопределения, None игнорируется
    """
    settings = Settings(seed=9, shards=4, threads=2)
    cfg = MCConfig.from_settings(settings, samples=5000, threads=None)
    assert (cfg.seed, cfg.shards, cfg.samples, cfg.threads) == (9, 4, 5000, 2)


def test_estimate_scaling():
    """
    Масштабирование оценки

    Пред-условия: оценка 2 ± 0.1
    Шаги:
    1. Умножить на −3

    Ожидаемый результат:
    Среднее −6, стандартная ошибка 0.3
    """
    scaled = MCEstimate(mean=2.0, se=0.1, samples=100, seed=1).scaled(-3.0)
    assert scaled.mean == pytest.approx(-6.0)
    assert scaled.se == pytest.approx(0.3)


def test_suite_grid_order():
    """
    Сетка набора упорядочена по id и включает дополнительные точки

    Пред-условия: нет
    Шаги:
    1. Вызвать suite_grid

    Ожидаемый результат:
    id не убывают, для ID-GTY две точки, все параметры типа IdentityParams
    """
    grid = suite.suite_grid()
    ids = [identity_id for identity_id, _ in grid]
    assert ids == sorted(ids)
    assert ids.count("ID-GTY") == 2
    assert all(isinstance(params, IdentityParams) for _, params in grid)


def test_run_id_and_profiles():
    """
    Идентификатор прогона и профили

    Пред-условия: seed 7, 2 шарда
    Шаги:
    1. Вызвать run_id_for и profile_config

    Ожидаемый результат:
    suite-smoke-seed7-shards2; профиль smoke уменьшает выборки; неизвестный профиль даёт ConfigError
    """
    cfg = MCConfig(seed=7, shards=2, samples=1_000_000)
    assert suite.run_id_for("smoke", cfg) == "suite-smoke-seed7-shards2"
    assert suite.profile_config("full", cfg) == cfg
    assert suite.profile_config("smoke", cfg).samples < cfg.samples
    with pytest.raises(ConfigError):
        suite.profile_config("huge", cfg)


def test_verdict_counts():
    """
    Подсчёт вердиктов

    Пред-условия: отчёты с вердиктами pass, pass, fail
    Шаги:
    1. Вызвать verdict_counts

    Ожидаемый результат:
    pass = 2, fail = 1, count = 3, остальные 0
    """
    reports = [
        suite._failed_report("ID-X", IdentityParams(), MCConfig(), RuntimeError("boom")),
    ]
    passed = reports[0].model_copy(update={"verdict": Verdict.passed})
    counts = suite.verdict_counts([passed, passed, reports[0]])
    assert counts == {"pass": 2, "fail": 1, "constant-mismatch": 0, "inconclusive": 0, "count": 3}
    assert reports[0].error == "RuntimeError: boom"


def test_execute_run_marks_failed_run(reports_dir, monkeypatch):
    """
    Сбой набора записывается в файл прогона

    Пред-условия: прогон создан, run_suite падает, повторное чтение файла прогона невозможно
    Шаги:
    1. Вызвать create_run и execute_run

    Ожидаемый результат:
    execute_run возвращает None, файл прогона прочитан один раз,
    статус failed и текст ошибки сохранены
    """
    run_id = suite.create_run("smoke", MCConfig(seed=5))
    reads = []
    read_run = suite.read_run

    def read_once(identifier):
        reads.append(identifier)
        if len(reads) > 1:
            raise OSError("run file unavailable")
        return read_run(identifier)

    def broken_suite(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(suite, "read_run", read_once)
    monkeypatch.setattr(suite, "run_suite", broken_suite)
    assert suite.execute_run(run_id) is None
    assert reads == [run_id], f"Файл прогона прочитан {len(reads)} раз"
    saved = json.loads((reports_dir / f"{run_id}.json").read_text(encoding="utf-8"))
    assert saved["status"] == "failed"
    assert saved["error"] == "boom"
    assert saved["reports"] == []
