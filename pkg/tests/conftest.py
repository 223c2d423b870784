import numpy as np
import pytest

from spectradiag import IrtSpec, gen_irt_matrix, score_matrix


@pytest.fixture
def tiny_binary():
    # 3 tasks x 3 models, mixed pass patterns, no degenerate rows
    return score_matrix(
        ["t1", "t2", "t3"],
        ["m1", "m2", "m3"],
        [[1, 0, 0], [1, 1, 0], [0, 1, 1]],
    )


@pytest.fixture
def tiny_continuous():
    return score_matrix(
        ["t1", "t2"],
        ["m1", "m2", "m3"],
        [[0.2, 0.5, 0.9], [0.73, 0.1, 0.4]],
    )


@pytest.fixture(scope="session")
def irt_k5():
    return gen_irt_matrix(IrtSpec(k=5, tasks=300, models=100, discrimination_scale=2.0, seed=11))


@pytest.fixture(scope="session")
def irt_k2_positive():
    return gen_irt_matrix(
        IrtSpec(
            k=2,
            tasks=200,
            models=60,
            discrimination_scale=2.0,
            loading_orientation="positive",
            seed=23,
        )
    )


@pytest.fixture(scope="session")
def noise_matrix():
    rng = np.random.default_rng(5)
    return score_matrix(
        [f"t{i}" for i in range(120)],
        [f"m{j}" for j in range(40)],
        (rng.random((120, 40)) < 0.5).astype(float),
    )
