import numpy as np
import pytest

from stiefel_xform.core.exceptions import (
    DimensionError,
    NotAFrame,
    NotPositiveDefinite,
    RankDeficient,
)
from stiefel_xform.utils.linalg import (
    Frame,
    SpdMatrix,
    canonical_frame,
    cayley_chart,
    cayley_chart_inverse,
    cholesky_upper,
    frame_completion,
    gram,
    orth_complement_frame,
    polar_decompose,
    principal_minors,
    sym_sqrt,
    triangular_decompose,
)

from ..utils.generator_data import generate_frame, generate_gaussian, generate_spd, make_rng


def test_gram_examples():
    """
    Матрица Грама v'v на простых входах

    Пред-условия: нет
    Шаги:
    1. Вычислить gram для первых двух столбцов I_3
    2. Вычислить gram для столбца (3, 4)'
    3. Вычислить gram случайной гауссовой 4×2 матрицы и сравнить с тройным циклом

    Ожидаемый результат:
    I_2, [[25]] и совпадение с прямым вычислением до 1e-14
    """
    assert np.array_equal(gram(np.eye(3)[:, :2]), np.eye(2)), "gram(I_3[:, :2]) должен быть I_2"
    assert np.array_equal(gram(np.array([[3.0], [4.0]])), np.array([[25.0]])), (
        "gram столбца (3, 4)' должен быть [[25]]"
    )

    x = generate_gaussian(make_rng(1), 4, 2)
    brute = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for row in range(4):
                brute[i, j] += x[row, i] * x[row, j]
    g = gram(x)
    assert np.max(np.abs(g - brute)) <= 1e-14, f"Расхождение с тройным циклом: {g} vs {brute}"
    assert np.array_equal(g, g.T), "Матрица Грама должна быть точно симметричной"


@pytest.mark.parametrize("r, expected", [
    (np.eye(3), np.eye(3)),
    (np.diag([4.0, 9.0]), np.diag([2.0, 3.0])),
])
def test_cholesky_upper_examples(r, expected):
    """
    Разложение Холецкого r = t't на диагональных входах

    Пред-условия: r положительно определена
    Шаги:
    1. Вычислить cholesky_upper(r)

    Ожидаемый результат:
    Верхнетреугольная t с положительной диагональью, равная ожидаемой
    """
    t = cholesky_upper(r)
    assert np.allclose(t, expected, atol=1e-15), f"Ожидалось {expected}, получено {t}"


def test_cholesky_upper_reconstructs_random_spd():
    """
    Восстановление r = g'g по множителю Холецкого

    Пред-условия: g гауссова 5×3
    Шаги:
    1. Построить r = g'g и вычислить t = cholesky_upper(r)
    2. Сравнить t't с r

    Ожидаемый результат:
    t верхнетреугольная, t_jj > 0, ‖t't − r‖_max ≤ 1e-12·‖r‖_max
    """
    g = generate_gaussian(make_rng(2), 5, 3)
    r = g.T @ g
    t = cholesky_upper(r)
    assert np.allclose(np.tril(t, -1), 0.0), "Множитель должен быть верхнетреугольным"
    assert np.all(np.diag(t) > 0), f"Диагональ должна быть положительной: {np.diag(t)}"
    error = np.max(np.abs(t.T @ t - r))
    assert error <= 1e-12 * np.max(np.abs(r)), f"Ошибка восстановления {error}"


def test_cholesky_upper_rejects_indefinite():
    """
    Неположительно определённая матрица

    Пред-условия: r = [[1, 2], [2, 1]] имеет отрицательное собственное значение
    Шаги:
    1. Вызвать cholesky_upper и principal_minors

    Ожидаемый результат:
    NotPositiveDefinite в обоих случаях
    """
    r = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefinite):
        cholesky_upper(r)
    with pytest.raises(NotPositiveDefinite):
        principal_minors(r)


@pytest.mark.parametrize("r, expected", [
    (np.eye(3), [1.0, 1.0, 1.0]),
    (np.diag([4.0, 9.0]), [4.0, 36.0]),
])
def test_principal_minors_examples(r, expected):
    """
    Главные миноры на диагональных матрицах

    Пред-условия: нет
    Шаги:
    1. Вычислить principal_minors(r)

    Ожидаемый результат:
    Произведения префиксов диагонали
    """
    minors = principal_minors(r)
    assert np.allclose(minors, expected, rtol=1e-14), f"Ожидалось {expected}, получено {minors}"


@pytest.mark.parametrize("seed", [3, 4, 5, 6])
def test_principal_minors_match_cholesky_prefix(seed):
    """
    Δ_i(r) = ∏_{j≤i} t_jj² для случайной r

    Пред-условия: r случайная положительно определённая, m ≤ 4
    Шаги:
    1. Вычислить миноры и множитель Холецкого
    2. Сравнить миноры с накопленными произведениями квадратов диагонали

    Ожидаемый результат:
    Совпадение до 1e-10 относительно, Δ_m = det(r)
    """
    rng = make_rng(seed)
    m = 1 + seed % 4
    r = generate_spd(rng, m)
    minors = principal_minors(r)
    prefix = np.cumprod(np.diag(cholesky_upper(r)) ** 2)
    assert np.allclose(minors, prefix, rtol=1e-10), f"{minors} vs {prefix}"
    assert np.isclose(minors[-1], np.linalg.det(r), rtol=1e-10), "Δ_m должен равняться det(r)"


def test_polar_decompose_examples():
    """
    Полярное разложение x = v r^{1/2} на простых входах

    Пред-условия: нет
    Шаги:
    1. Разложить готовый репер
    2. Разложить x = 2·e₁ в R^3

    Ожидаемый результат:
    (x, I_m) и (e₁, [[4]])
    """
    x = generate_frame(make_rng(7), 4, 2)
    v, r = polar_decompose(x)
    assert np.allclose(v.mat, x, atol=1e-10), "Репер должен переходить сам в себя"
    assert np.allclose(r.mat, np.eye(2), atol=1e-10), f"Ожидалась I_2, получено {r.mat}"

    v, r = polar_decompose(np.array([[2.0], [0.0], [0.0]]))
    assert np.allclose(v.mat, [[1.0], [0.0], [0.0]], atol=1e-12), f"Ожидался e₁, получено {v.mat}"
    assert np.allclose(r.mat, [[4.0]]), f"Ожидалось [[4]], получено {r.mat}"


@pytest.mark.parametrize("n, m", [(5, 2), (4, 4), (6, 3)])
def test_polar_decompose_reassembles(n, m):
    """
    v·sqrt(r) восстанавливает x

    Пред-условия: x гауссова полного ранга
    Шаги:
    1. Разложить x и собрать v·sym_sqrt(r)

    Ожидаемый результат:
    Относительная ошибка ≤ 1e-10, v является репером
    """
    x = generate_gaussian(make_rng(n * 10 + m), n, m)
    v, r = polar_decompose(x)
    error = np.max(np.abs(v.mat @ sym_sqrt(r) - x))
    assert error <= 1e-10 * np.max(np.abs(x)), f"Ошибка восстановления {error}"
    assert isinstance(v, Frame) and isinstance(r, SpdMatrix), "Ожидались типы Frame и SpdMatrix"


def test_polar_decompose_rank_deficient():
    """
    Вырожденная матрица

    Пред-условия: столбцы x линейно зависимы
    Шаги:
    1. Вызвать polar_decompose

    Ожидаемый результат:
    RankDeficient
    """
    x = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(RankDeficient):
        polar_decompose(x)


def test_frame_completion_canonical_cases():
    """
    Дополнение канонического репера и e₁ в R²

    Пред-условия: каноническая политика дополнения
    Шаги:
    1. Дополнить u₀ = [0; I_2] в R^5
    2. Дополнить u = e₁ в R^2

    Ожидаемый результат:
    g = I_5; во втором случае g ортогональна и переводит e₂ в e₁
    """
    g = frame_completion(canonical_frame(5, 2))
    assert np.allclose(g, np.eye(5)), f"Ожидалась единичная матрица, получено {g}"

    u = np.array([[1.0], [0.0]])
    g = frame_completion(u)
    assert np.max(np.abs(g.T @ g - np.eye(2))) <= 1e-12, "g должна быть ортогональной"
    assert np.allclose(g @ np.array([[0.0], [1.0]]), u), "g должна переводить e₂ в e₁"


@pytest.mark.parametrize("policy", ["canonical", "random"])
def test_frame_completion_random_frame(policy):
    """
    Определяющие свойства дополнения для случайного репера

    Пред-условия: u случайный 5×2 репер
    Шаги:
    1. Построить g_u выбранной политикой

    Ожидаемый результат:
    g_u'g_u = I_5 и g_u·u₀ = u с точностью 1e-10
    """
    rng = make_rng(8)
    u = generate_frame(rng, 5, 2)
    g = frame_completion(u, policy=policy, rng=rng)
    assert np.max(np.abs(gram(g) - np.eye(5))) <= 1e-10, "g_u должна быть ортогональной"
    assert np.max(np.abs(g @ canonical_frame(5, 2) - u)) <= 1e-10, "g_u·u₀ должно равняться u"


def test_orth_complement_frame():
    """
    Ортогональное дополнение репера

    Пред-условия: нет
    Шаги:
    1. Дополнить u₀ = [0; I_2] в R^5
    2. Дополнить e₃ в R^3
    3. Дополнить случайный 5×2 репер

    Ожидаемый результат:
    [I_3; 0], базис {e₁, e₂}, ũ'u = 0 и ũ'ũ = I с точностью 1e-10
    """
    assert np.allclose(orth_complement_frame(canonical_frame(5, 2)), np.eye(5, 3)), (
        "Дополнение u₀ должно быть [I_3; 0]"
    )
    assert np.allclose(orth_complement_frame(np.array([[0.0], [0.0], [1.0]])), np.eye(3, 2)), (
        "Дополнение e₃ должно быть {e₁, e₂}"
    )
    u = generate_frame(make_rng(9), 5, 2)
    tilde = orth_complement_frame(u)
    assert np.max(np.abs(tilde.T @ u)) <= 1e-10, "Дополнение должно быть ортогонально u"
    assert np.max(np.abs(gram(tilde) - np.eye(3))) <= 1e-10, "Дополнение должно быть репером"


def test_orth_complement_of_full_frame_rejected():
    """
    Дополнение квадратного ортогонального репера

    Пред-условия: k = n
    Шаги:
    1. Вызвать orth_complement_frame(I_3)

    Ожидаемый результат:
    DimensionError
    """
    with pytest.raises(DimensionError):
        orth_complement_frame(np.eye(3))


def test_frame_validation():
    """
    Проверка инварианта типа Frame

    Пред-условия: нет
    Шаги:
    1. Создать Frame из неортонормированной матрицы
    2. Создать Frame из широкой матрицы
    3. Создать Frame с пересчётом через полярный множитель

    Ожидаемый результат:
    NotAFrame, DimensionError и валидный репер
    """
    with pytest.raises(NotAFrame):
        Frame(np.array([[1.0, 0.1], [0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DimensionError):
        Frame(np.ones((2, 3)))
    frame = Frame.orthonormalized(np.array([[1.0, 0.1], [0.0, 1.0], [0.0, 0.0]]))
    assert np.max(np.abs(gram(frame) - np.eye(2))) <= 1e-10, "Пересчитанный репер не ортонормирован"


def test_spd_matrix_validation():
    """
    Проверка инварианта типа SpdMatrix

    Пред-условия: нет
    Шаги:
    1. Создать SpdMatrix из несимметричной матрицы
    2. Создать SpdMatrix из индефинитной матрицы

    Ожидаемый результат:
    NotPositiveDefinite в обоих случаях
    """
    with pytest.raises(NotPositiveDefinite):
        SpdMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        SpdMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_triangular_decompose():
    """
    Треугольные координаты x = v t

    Пред-условия: x гауссова 5×3
    Шаги:
    1. Разложить x

    Ожидаемый результат:
    v репер, t верхнетреугольная с положительной диагональю, v t = x
    """
    x = generate_gaussian(make_rng(10), 5, 3)
    v, t = triangular_decompose(x)
    assert np.max(np.abs(gram(v) - np.eye(3))) <= 1e-10, "v должен быть репером"
    assert np.allclose(np.tril(t, -1), 0.0) and np.all(np.diag(t) > 0), f"Неверная форма t: {t}"
    assert np.allclose(v @ t, x, atol=1e-12), "v t должно восстанавливать x"


def test_cayley_chart_and_inverse():
    """
    Карта μ(y) = [y; I](I + y'y)^{-1/2} и её обращение

    Пред-условия: y гауссова 3×2
    Шаги:
    1. Построить v = cayley_chart(y)
    2. Восстановить y = cayley_chart_inverse(v)

    Ожидаемый результат:
    v репер 5×2, восстановленная y совпадает с исходной
    """
    y = generate_gaussian(make_rng(11), 3, 2)
    v = cayley_chart(y)
    assert v.shape == (5, 2), f"Неверная форма {v.shape}"
    assert np.max(np.abs(gram(v) - np.eye(2))) <= 1e-10, "μ(y) должен быть репером"
    assert np.allclose(cayley_chart_inverse(v), y, atol=1e-10), "Обращение карты не совпало с y"
