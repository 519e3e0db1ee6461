import pytest

import taskcov as tc


@pytest.fixture
def toy():
    return tc.generate_toy(35)


@pytest.fixture
def toy_hp():
    return tc.Hyperparams(lam1=0.01, lam2=0.005)


def random_dataset(rng, m=3, d=2, n_lo=3, n_hi=8, noise=0.1):
    """Small regression dataset with i.i.d. task weights."""
    tasks = []
    for i in range(m):
        n = int(rng.integers(n_lo, n_hi + 1))
        x = rng.normal(size=(n, d))
        w = rng.normal(size=d)
        y = x @ w + rng.normal() + noise * rng.normal(size=n)
        tasks.append((f"t{i}", x, y))
    return tc.MultiTaskDataset(tasks)
