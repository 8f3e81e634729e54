"""Seeded random instance families shared by the unit and acceptance tests."""
import numpy as np

from riskauction import Instance, Utility, check_assumption_A1, virtual_values_multi, virtual_values_single


def _grid(rng, K):
    steps = rng.uniform(0.2, 1.0, size=K - 1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _payments(rng, z_max, M):
    inner = np.sort(rng.uniform(0.05, 0.95, size=M - 2)) * z_max
    return np.concatenate([[0.0], inner, [z_max]])


def _pmf(rng, K):
    f = rng.dirichlet(np.ones(K)) + 0.02
    return f / f.sum()


def random_single_instance(rng, irregular=False, max_tries=500):
    """One exponential buyer; K in 2..5, M in 2..4, alpha in [0.05, 1], z_max in (v_K, 10 v_K]."""
    for _ in range(max_tries):
        K = int(rng.integers(3 if irregular else 2, 6))
        M = int(rng.integers(2, 5))
        values = _grid(rng, K)
        z_max = values[-1] * rng.uniform(1.01, 10.0)
        f = _pmf(rng, K)
        if irregular:
            # a thin interior atom is the usual way to break monotonicity
            k = int(rng.integers(1, K - 1))
            f[k] = rng.uniform(0.005, 0.03)
            f = f / f.sum()
        alpha = float(rng.uniform(0.05, 1.0))
        inst = Instance(values, f, _payments(rng, z_max, M), 1, Utility.exponential(alpha))
        if not irregular or not virtual_values_single(inst).regular:
            return inst
    raise RuntimeError("could not draw an irregular instance")


def random_multi_instance(rng, irregular=None, max_tries=5000):
    """n in {2, 3}, K in {2, 3}, M = 2, assumption A1 satisfied."""
    for _ in range(max_tries):
        n = int(rng.integers(2, 4))
        K = int(rng.integers(2, 4))
        values = _grid(rng, K)
        f = _pmf(rng, K)
        if irregular and K == 3:
            f[1] = rng.uniform(0.005, 0.03)
            f = f / f.sum()
        alpha = float(rng.uniform(0.02, 0.4))
        z_max = values[-1] * rng.uniform(2.0, 40.0)
        inst = Instance(values, f, [0.0, z_max], n, Utility.exponential(alpha))
        if not check_assumption_A1(inst).ok:
            continue
        if irregular is None or virtual_values_multi(inst).regular != irregular:
            return inst
    raise RuntimeError("could not draw an A1 instance with the requested regularity")


def single_buyer_family(seed=20240601, count=200, irregular_share=0.25):
    rng = np.random.default_rng(seed)
    n_irr = int(round(count * irregular_share))
    return [random_single_instance(rng, irregular=i < n_irr) for i in range(count)]


def multi_buyer_family(seed=20240602, count=50):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        # every fifth instance is forced irregular
        out.append(random_multi_instance(rng, irregular=True if i % 5 == 0 else None))
    return out
