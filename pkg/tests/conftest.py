import gc
import time

import numpy as np
import pytest

import rigaeig.eigensolver
from rigaeig.assembly import build_system
from rigaeig.eigensolver import solve_spectrum
from rigaeig.sparsela import factor_ldl, separator_ordering

# always-on solver self-checks in test builds: basis M-orthonormality at
# every restart boundary and the spectral-transform identity per pair
rigaeig.eigensolver.DEBUG_INVARIANTS = True


@pytest.fixture(scope="session")
def ne256_cost_sweep():
    """Factorization statistics of the 2D ne=256 cost grid.

    Shared between the cost-model tests and the acceptance criteria on
    factorization trends; stiffness-only assembly keeps memory bounded.
    """
    cases = [(p, lv) for p in (2, 3, 5) for lv in (0, 4)]
    cases += [(4, lv) for lv in range(9)]
    data = {}
    for p, lv in cases:
        system = build_system(2, 256, p, lv, stiffness_only=True)
        perm = separator_ordering(system)
        t0 = time.perf_counter()
        fact = factor_ldl(system.K, ordering=perm)
        data[(p, lv)] = {
            "N": system.dof_count,
            "nnz_K": system.K.nnz,
            "fill_nnz": fact.fill_nnz,
            "factor_flops": fact.factor_flops,
            "seconds": time.perf_counter() - t0,
        }
        del system, perm, fact
        gc.collect()
    return data


@pytest.fixture(scope="session")
def counter_scaling_runs():
    """solve_spectrum runs on one 2D system for N0 in 64..1024."""
    system = build_system(2, 64, 2, 2)
    results = {}
    for n0 in (64, 128, 256, 512, 1024):
        results[n0] = solve_spectrum(system, count=n0, seed=1000 + n0)
    return system, results


def pytest_sessionfinish(session, exitstatus):
    gc.collect()
