import numpy as np


def make_rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def generate_gaussian(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols))


def generate_frame(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, m)))
    return q * np.sign(np.diagonal(r))


def generate_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    return generate_frame(rng, n, n)


def generate_spd(rng: np.random.Generator, m: int, shift: float = 0.25) -> np.ndarray:
    g = rng.standard_normal((m + 2, m))
    r = g.T @ g + shift * np.eye(m)
    return 0.5 * (r + r.T)


def generate_upper_triangular(rng: np.random.Generator, m: int) -> np.ndarray:
    t = np.triu(rng.standard_normal((m, m)), 1)
    t[np.arange(m), np.arange(m)] = rng.uniform(0.5, 2.0, size=m)
    return t


def generate_spd_cases(count: int = 200, seed: int = 0, max_m: int = 4):
    """Список случайных положительно определённых матриц порядков 1..max_m по кругу"""
    rng = make_rng(seed)
    cases = []
    for index in range(count):
        m = 1 + index % max_m
        cases.append(generate_spd(rng, m))
    return cases
