import math

import numpy as np
import pytest

from stiefel_xform.core.exceptions import AdmissibilityError, DimensionError, PoleError
from stiefel_xform.services import fields, manifold, special, transforms
from stiefel_xform.services.transforms import Transform, TransformKind
from stiefel_xform.utils.linalg import canonical_frame, leading_frame

from ..conftest import agree, small_config, within_sigmas
from ..utils.generator_data import generate_frame, generate_orthogonal, make_rng


def _e(n: int, index: int = 0) -> np.ndarray:
    point = np.zeros((n, 1))
    point[index, 0] = 1.0
    return point


def test_funk_plane_is_exact():
    """
    Преобразование Функа на V_{2,1} в точке e_1

    Пред-условия: f(v) = v_1², слой над e_1 равен {±e_2}
    Шаги:
    1. Вычислить funk(f, e_1)

    Ожидаемый результат:
    Значение 0 с нулевой стандартной ошибкой
    """
    estimate = transforms.funk(fields.monomial(2, 1), _e(2), small_config())
    assert abs(estimate.mean) < 1e-12, f"(Ff)(e_1) = {estimate.mean}"
    assert estimate.se < 1e-12


@pytest.mark.parametrize("name, call, expected", [
    ("q", lambda cfg: transforms.q_transform(fields.constant(4, 1), _e(4), 2.0, cfg), 4 / math.pi),
    ("m", lambda cfg: transforms.m_transform(fields.constant(3, 1), _e(3), 2.0, cfg), 0.5),
    ("cosine", lambda cfg: transforms.cosine(fields.constant(3, 1), _e(3), 2.0, cfg), 0.5),
    ("cosine-4-2-2", lambda cfg: transforms.cosine(
        fields.constant(4, 2), canonical_frame(4, 2), 3.0, cfg),
     special.exl_mass(4, 2, 2, (1.0, 1.0))),
    ("sine-flat", lambda cfg: transforms.sine(
        fields.monomial(4, 1), canonical_frame(4, 2), 2.0, cfg), 0.25),
    ("composite-cosine", lambda cfg: transforms.composite_cosine(
        fields.constant(4, 3), canonical_frame(4, 2), (1.5, 0.5), cfg),
     special.exl_mass(4, 2, 3, (1.5, 0.5))),
    ("dual-funk", lambda cfg: transforms.dual_funk(
        fields.monomial(5, 2), canonical_frame(5, 2), cfg), 1 / 3),
])
def test_transform_closed_forms(name, call, expected):
    """
    Преобразования на полях с известным средним

    Пред-условия: постоянное поле или моном v_11²; ядро синуса при α + k = n тождественно 1
    Шаги:
    1. Оценить преобразование на 20000 выборках

    Ожидаемый результат:
    Отклонение от замкнутой формы не больше 4·se
    """
    estimate = call(small_config())
    assert within_sigmas(estimate, expected), (
        f"{name}: {estimate.mean} ± {estimate.se}, ожидалось {expected}"
    )


def test_cosine_closed_form_is_one_third():
    """
    Масса косинус-ядра на V_{4,2} при α − k = 1

    Пред-условия: λ = (1, 1)
    Шаги:
    1. Вычислить exl_mass(4, 2, 2, (1, 1))

    Ожидаемый результат:
    1/3
    """
    assert math.isclose(special.exl_mass(4, 2, 2, (1.0, 1.0)), 1 / 3, rel_tol=1e-12)


@pytest.mark.parametrize("kwargs, error, hypothesis", [
    ({"kind": "cosine", "n": 5, "m": 2, "k": 1, "alpha": 3.0}, AdmissibilityError, "m <= k"),
    ({"kind": "cosine", "n": 5, "m": 2, "k": 3, "alpha": 0.5}, AdmissibilityError, "alpha > m-1"),
    ({"kind": "cosine", "n": 5, "m": 2, "k": 3}, AdmissibilityError, "alpha required"),
    ({"kind": "sine", "n": 4, "m": 2, "k": 3, "alpha": 3.0}, AdmissibilityError, "m <= n-k"),
    ({"kind": "m", "n": 4, "m": 2, "k": 1, "alpha": 3.0}, AdmissibilityError, "k = m"),
    ({"kind": "q", "n": 3, "m": 2, "k": 2, "alpha": 3.0}, AdmissibilityError, "2m <= n"),
    ({"kind": "composite-cosine", "n": 4, "m": 2, "k": 2, "lam": (1.0,)}, AdmissibilityError,
     "lam has length m"),
    ({"kind": "composite-cosine", "n": 4, "m": 2, "k": 2, "lam": (1.0, -1.5)}, AdmissibilityError,
     "lam_j > j-k-1"),
    ({"kind": "dual-sine", "n": 6, "m": 1, "k": 2, "alpha": 3.0, "mode": "complement"},
     AdmissibilityError, None),
    ({"kind": "funk", "n": 3, "m": 2, "k": 2}, DimensionError, None),
    ({"kind": "comp-radon", "n": 4, "m": 3, "k": 2}, DimensionError, None),
])
def test_transform_guards(kwargs, error, hypothesis):
    """
    Проверки допустимости параметров преобразования

    Пред-условия: параметры нарушают одну гипотезу
    Шаги:
    1. Создать Transform

    Ожидаемый результат:
    AdmissibilityError с именем гипотезы или DimensionError
    """
    with pytest.raises(error) as info:
        Transform(**kwargs)
    if hypothesis is not None:
        assert info.value.hypothesis == hypothesis, f"Гипотеза {info.value.hypothesis}"


def test_unsafe_overrides_convergence_guard():
    """
    Флаг unsafe снимает только проверку сходимости по α

    Пред-условия: α ≤ m − 1
    Шаги:
    1. Создать косинус-преобразование с unsafe=True
    2. Создать косинус-преобразование с m > k и unsafe=True

    Ожидаемый результат:
    Первое создаётся, второе даёт AdmissibilityError
    """
    transform = Transform(TransformKind.cosine, 5, 2, 3, alpha=0.5, unsafe=True)
    assert transform.alpha == 0.5
    with pytest.raises(AdmissibilityError):
        Transform(TransformKind.cosine, 5, 2, 1, alpha=3.0, unsafe=True)


def test_evaluate_checks_point_and_field():
    """
    Несовместимые точка и поле

    Пред-условия: косинус-преобразование на V_{4,1} в точке из V_{4,2}
    Шаги:
    1. Передать точку неверной формы
    2. Передать не-репер
    3. Передать поле неверной ширины

    Ожидаемый результат:
    DimensionError во всех случаях
    """
    transform = Transform(TransformKind.cosine, 4, 1, 2, alpha=2.0)
    cfg = small_config(samples=100)
    with pytest.raises(DimensionError):
        transforms.evaluate(transform, fields.constant(4, 1), canonical_frame(4, 1), cfg)
    with pytest.raises(DimensionError):
        transforms.evaluate(transform, fields.constant(4, 1), 2 * canonical_frame(4, 2), cfg)
    with pytest.raises(DimensionError):
        transforms.evaluate(transform, fields.constant(4, 2), canonical_frame(4, 2), cfg)


@pytest.mark.parametrize("kind, alpha", [("funk", None), ("cosine", 3.0), ("sine", 4.5)])
def test_left_equivariance(kind, alpha):
    """
    Эквивариантность (T f)(gu) = (T (f∘g))(u)

    Пред-условия: поле poly на V_{6,1}, u ∈ V_{6,2}, g ∈ O(6)
    Шаги:
    1. Оценить обе стороны независимыми потоками

    Ожидаемый результат:
    Согласие в пределах 5 суммарных se
    """
    rng = make_rng(5)
    field = fields.poly(6, 1, seed=3)
    g = generate_orthogonal(rng, 6)
    u = generate_frame(rng, 6, 2)
    transform = Transform(kind, 6, 1, 2, alpha=alpha)
    moved = transforms.evaluate(transform, field, g @ u, small_config(seed=1))
    pulled = transforms.evaluate(transform, fields.left_composed(field, g), u, small_config(seed=2))
    assert agree(moved, pulled), (
        f"{kind}: {moved.mean} ± {moved.se} против {pulled.mean} ± {pulled.se}"
    )


def test_funk_completion_independence():
    """
    Значение Функа не зависит от выбора дополнения

    Пред-условия: поле poly на V_{5,2}, u ∈ V_{5,2}
    Шаги:
    1. Оценить funk с политиками canonical и random

    Ожидаемый результат:
    Согласие в пределах 5 суммарных se
    """
    field = fields.poly(5, 2, seed=4)
    u = generate_frame(make_rng(6), 5, 2)
    canonical = transforms.funk(field, u, small_config(), policy="canonical")
    random = transforms.funk(field, u, small_config(seed=12), policy="random")
    assert agree(canonical, random), (
        f"{canonical.mean} ± {canonical.se} против {random.mean} ± {random.se}"
    )


def test_funk_absorbs_right_average():
    """
    F f = F f̃ для правого усреднения f̃

    Пред-условия: поле poly на V_{5,2}
    Шаги:
    1. Оценить funk(f) и funk(right_average(f))

    Ожидаемый результат:
    Согласие в пределах 5 суммарных se
    """
    field = fields.poly(5, 2, seed=8)
    u = leading_frame(5, 2)
    plain = transforms.funk(field, u, small_config())
    averaged = transforms.funk(fields.right_average(field, draws=16), u, small_config(seed=13))
    assert agree(plain, averaged), (
        f"{plain.mean} ± {plain.se} против {averaged.mean} ± {averaged.se}"
    )


def test_sine_complement_route():
    """
    Синус-преобразование в точке u равно косинус-преобразованию в дополнении u

    Пред-условия: n = 5, m = 1, k = 2, α = 2.5
    Шаги:
    1. Оценить sine в режимах direct и complement

    Ожидаемый результат:
    Согласие в пределах 5 суммарных se
    """
    field = fields.monomial(5, 1, i=2, j=1, d=2)
    u = generate_frame(make_rng(7), 5, 2)
    direct = transforms.sine(field, u, 2.5, small_config())
    complement = transforms.sine(field, u, 2.5, small_config(seed=14), mode="complement")
    assert agree(direct, complement), (
        f"{direct.mean} ± {direct.se} против {complement.mean} ± {complement.se}"
    )


def test_comp_radon_full_width_is_identity():
    """
    Сравнительное преобразование Радона при k = m возвращает φ(v)

    Пред-условия: поле poly на V_{4,2}
    Шаги:
    1. Вычислить comp_radon в точке v

    Ожидаемый результат:
    Значение φ(v) с нулевой стандартной ошибкой
    """
    field = fields.poly(4, 2, seed=2)
    v = generate_frame(make_rng(8), 4, 2)
    estimate = transforms.comp_radon(field, v, small_config(samples=500))
    assert estimate.mean == pytest.approx(float(field(v)), abs=1e-12)
    assert estimate.se < 1e-12


def test_nested_composition():
    """
    Композиция двух M-преобразований на постоянном поле

    Пред-условия: n = 3, m = 1, α = 2, M 1 ≡ 1/2
    Шаги:
    1. Оценить (M ∘ M) 1 в точке e_1 вложенным Монте-Карло

    Ожидаемый результат:
    Отклонение от 1/4 не больше 4·se
    """
    transform = Transform(TransformKind.mcos, 3, 1, 1, alpha=2.0)
    estimate = transforms.compose(transform, transform, fields.constant(3, 1), _e(3),
                                  small_config())
    assert within_sigmas(estimate, 0.25), f"(M∘M)1 = {estimate.mean} ± {estimate.se}"


def test_compose_rejects_mismatched_widths():
    """
    Композиция несовместимых по ширине преобразований

    Пред-условия: внешнее интегрирует по V_{5,1}, внутреннее вычисляется в V_{5,2}
    Шаги:
    1. Вызвать compose

    Ожидаемый результат:
    DimensionError
    """
    outer = Transform(TransformKind.cosine, 5, 1, 2, alpha=2.0)
    inner = Transform(TransformKind.cosine, 5, 1, 2, alpha=2.0)
    with pytest.raises(DimensionError):
        transforms.compose(outer, inner, fields.constant(5, 1), canonical_frame(5, 2),
                           small_config())


def test_mass_of_cosine_kernel():
    """
    Масса ∫ (C 1)(x) d*x косинус-ядра

    Пред-условия: n = 3, m = k = 1, α = 2
    Шаги:
    1. Вызвать mass

    Ожидаемый результат:
    Отклонение от 1/2 не больше 4·se
    """
    transform = Transform(TransformKind.cosine, 3, 1, 1, alpha=2.0)
    estimate = transforms.mass(transform, fields.constant(3, 1), small_config())
    assert within_sigmas(estimate, 0.5), f"Масса {estimate.mean} ± {estimate.se}"


def test_normalized_scales_estimate():
    """
    Нормированное преобразование равно коэффициенту, умноженному на сырое

    Пред-условия: синус-преобразование (4, 1, 2), α = 2.5
    Шаги:
    1. Вычислить evaluate и normalized с одним seed

    Ожидаемый результат:
    mean и se умножены на normalizer
    """
    transform = Transform(TransformKind.sine, 4, 1, 2, alpha=2.5)
    field = fields.monomial(4, 1)
    cfg = small_config()
    point = canonical_frame(4, 2)
    raw = transforms.evaluate(transform, field, point, cfg)
    scaled = transforms.normalized(transform, field, point, cfg)
    coefficient = transforms.normalizer(transform)
    assert scaled.mean == pytest.approx(raw.mean * coefficient, rel=1e-12)
    assert scaled.se == pytest.approx(raw.se * abs(coefficient), rel=1e-12)


def test_normalizer_errors():
    """
    Нормирующий коэффициент вне своей области

    Пред-условия: M при α + 2m − n = 0 и преобразование Функа
    Шаги:
    1. Вызвать normalizer

    Ожидаемый результат:
    PoleError для M, AdmissibilityError для Функа
    """
    with pytest.raises(PoleError):
        transforms.normalizer(Transform(TransformKind.mcos, 3, 1, 1, alpha=2.0))
    with pytest.raises(AdmissibilityError):
        transforms.normalizer(Transform(TransformKind.funk, 4, 1, 2))


def test_funk_draws_lie_in_fiber():
    """
    Выборки Функа лежат в слое над u

    Пред-условия: u ∈ V_{5,2}, m = 2
    Шаги:
    1. Вызвать Transform.draw

    Ожидаемый результат:
    u'y = 0 для всех выборок
    """
    transform = Transform(TransformKind.funk, 5, 2, 2)
    u = np.asarray(manifold.sample_stiefel(5, 2, make_rng(9)))
    ys = transform.draw(u, 100, make_rng(10))
    assert np.max(np.abs(u.T @ ys)) < 1e-12
