import logging

import pytest
from click.testing import CliRunner

from stiefel_xform.core.config import get_settings
from stiefel_xform.schemas.mc import MCConfig, MCEstimate


SMALL_SAMPLES = 20_000
SMALL_OUTER = 1_000
SMALL_INNER = 50


def small_config(**overrides) -> MCConfig:
    """Конфигурация Монте-Карло для быстрых тестов"""
    values = {
        "samples": SMALL_SAMPLES,
        "seed": 11,
        "n_outer": SMALL_OUTER,
        "n_inner": SMALL_INNER,
    }
    values.update(overrides)
    return MCConfig(**values)


def within_sigmas(estimate: MCEstimate, expected: float, sigmas: float = 4.0,
                  floor: float = 1e-9) -> bool:
    """Проверяет, что оценка отличается от точного значения не более чем на sigmas·se"""
    return abs(estimate.mean - expected) <= max(floor, sigmas * estimate.se)


def agree(first: MCEstimate, second: MCEstimate, sigmas: float = 5.0,
          floor: float = 1e-9) -> bool:
    """Проверяет совпадение двух независимых оценок по суммарной стандартной ошибке"""
    combined = (first.se ** 2 + second.se ** 2) ** 0.5
    return abs(first.mean - second.mean) <= max(floor, sigmas * combined)


@pytest.fixture(scope="function")
def mc_config():
    """Фикстура с уменьшенным числом выборок"""
    return small_config()


@pytest.fixture(scope="function")
def cli_runner():
    """Фикстура CliRunner; после теста снимает обработчики логов, привязанные к его потокам"""
    yield CliRunner()
    logging.getLogger().handlers.clear()


@pytest.fixture(scope="function")
def reports_dir(tmp_path, monkeypatch):
    """Фикстура, перенаправляющая сохранение прогонов во временный каталог"""
    monkeypatch.setenv("STIEFEL_XFORM_REPORTS_DIR", str(tmp_path))
    get_settings.cache_clear()
    yield tmp_path
    get_settings.cache_clear()
