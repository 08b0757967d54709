import math
import time

import numpy as np
import pytest

from rigaeig.assembly import build_system
from rigaeig.costmodel import (
    RunReport,
    TimeModel,
    improvement_report,
    predict_factor_flops,
    predict_fb_flops,
    predict_time,
    time_exponents,
)
from rigaeig.eigensolver import solve_spectrum
from rigaeig.sparsela import CostCounters, factor_ldl, mass_matvec, separator_ordering


def test_factor_prediction_scaling_2d():
    # doubling ne quadruples N and multiplies the estimate by 8
    r = predict_factor_flops(4 * 4096, 3, 0, 2) / predict_factor_flops(4096, 3, 0, 2)
    np.testing.assert_allclose(r, 8.0, rtol=1e-12)


def test_fb_prediction_scaling_2d():
    r = predict_fb_flops(4 * 4096, 3, 0, 2) / predict_fb_flops(4096, 3, 0, 2)
    np.testing.assert_allclose(r, 4.0, rtol=1e-12)


def test_predictions_monotone():
    for fn in (predict_factor_flops, predict_fb_flops):
        vals_n = [fn(n, 3, 2, 2) for n in (10_000, 40_000, 160_000)]
        assert vals_n[0] < vals_n[1] < vals_n[2]
        vals_p = [fn(40_000, p, 2, 2) for p in (2, 3, 4, 5)]
        assert all(a < b for a, b in zip(vals_p, vals_p[1:]))


def test_factor_improvement_grows_superquadratically_at_scale():
    # blocksize-16 partitioning of a large mesh: the predicted
    # factorization saving grows at least like p^2
    d, ne = 2, 2048
    level = ne.bit_length() - 1 - 4
    ratios = {}
    for p in (2, 5):
        n = (ne + 2**level * (p - 1) - 1) ** d
        ratios[p] = predict_factor_flops(n, p, 0, d) / predict_factor_flops(n, p, level, d)
    slope = math.log(ratios[5] / ratios[2]) / math.log(5 / 2)
    assert slope >= 2.0


def test_measured_factor_slope_near_model(ne256_cost_sweep):
    # log-log slope in p of the measured blocksize-16 factorization
    # flops against the model's slope on the same configurations
    ps = [2, 3, 4, 5]
    measured = [ne256_cost_sweep[(p, 4)]["factor_flops"] for p in ps]
    model = [predict_factor_flops(ne256_cost_sweep[(p, 4)]["N"], p, 4, 2) for p in ps]
    lp = np.log([float(p) for p in ps])
    slope_measured = np.polyfit(lp, np.log(measured), 1)[0]
    slope_model = np.polyfit(lp, np.log(model), 1)[0]
    assert abs(slope_measured - slope_model) <= 0.7


def test_fill_ratio_band_p4(ne256_cost_sweep):
    # f/b work scales with the factor fill; the blocksize-16 improvement
    # at p=4 lands in the band reported for this operation
    ratio = ne256_cost_sweep[(4, 0)]["fill_nnz"] / ne256_cost_sweep[(4, 4)]["fill_nnz"]
    assert 1.5 < ratio < 3.5


def test_matvec_ratio_band_p5():
    # mat-vec cost ratio (baseline/refined) for p=5 at blocksize 16:
    # the refined mass matrix has a few percent more nonzeros per
    # direction, squared in 2D
    c_iga, c_riga = CostCounters(), CostCounters()
    m_iga = build_system(2, 256, 5, 0).M
    v = np.zeros(m_iga.dimension)
    mass_matvec(m_iga, v, c_iga)
    m_riga = build_system(2, 256, 5, 4).M
    v = np.zeros(m_riga.dimension)
    mass_matvec(m_riga, v, c_riga)
    ratio = c_iga.matvec.flops / c_riga.matvec.flops
    assert 0.77 < ratio < 0.90


def test_time_exponents_table():
    assert time_exponents("fact", "iga", 2) == (1.5, 3.0)
    assert time_exponents("fact", "riga", 2) == (1.5, 1.0)
    assert time_exponents("fb", "iga", 3) == (4 / 3, 2.0)
    assert time_exponents("fb", "riga", 3) == (4 / 3, 1.0)
    assert time_exponents("matvec", "iga", 3) == (1.0, 3.0)
    with pytest.raises(ValueError):
        time_exponents("fact", "fem", 2)
    with pytest.raises(ValueError):
        time_exponents("assembly", "iga", 2)


def test_time_model_scaling_and_window():
    model = TimeModel.calibrate("fact", "iga", 2, 10_000, 3, 2.0)
    np.testing.assert_allclose(model.predict(40_000, 3) / model.predict(10_000, 3), 8.0)
    with pytest.raises(ValueError):
        model.predict(64 * 10_000 + 1, 3)
    np.testing.assert_allclose(
        predict_time("fact", "iga", 2, (10_000, 3, 2.0), 10_000, 3), 2.0
    )


def test_time_model_predicts_measured_factorization():
    # calibrate on ne=64 and predict ne=128 within a factor of three
    times = {}
    for ne in (64, 128):
        system = build_system(2, ne, 3, 0, stiffness_only=True)
        perm = separator_ordering(system)
        t0 = time.perf_counter()
        factor_ldl(system.K, ordering=perm)
        times[ne] = (system.dof_count, time.perf_counter() - t0)
    n64, t64 = times[64]
    n128, t128 = times[128]
    predicted = predict_time("fact", "iga", 2, (n64, 3, t64), n128, 3)
    assert predicted / 3 < t128 < predicted * 3


def _report_for(d, ne, p, level, n0, seed):
    system = build_system(d, ne, p, level)
    res = solve_spectrum(system, count=n0, seed=seed)
    cfg = {"d": d, "ne": ne, "p": p, "level": level, "N": system.dof_count, "N0": n0}
    return RunReport.from_counters(cfg, res.counters), res


def test_report_conserves_counters():
    report, res = _report_for(1, 16, 3, 1, 10, 0)
    c = res.counters
    assert report.counters == {
        "Nsh": c.nsh, "Nfa": c.nfa, "Nfb": c.nfb, "Nmv": c.nmv, "Nit": c.nit,
    }
    assert report.flops["fb"] == c.fb.flops
    assert report.flops["matvec"] == c.matvec.flops
    assert report.counters["Nfa"] == report.counters["Nsh"] + c.retries
    schema = report.to_json_dict()
    assert set(schema) == {"config", "counters", "flops", "time_s", "ratios_vs_baseline"}
    assert set(schema["time_s"]) == {"fact", "fb", "matvec", "total"}


def test_improvement_report_identity_and_validation():
    report, _ = _report_for(1, 16, 2, 0, 8, 1)
    same = improvement_report(report, report)
    for v in same["flops"].values():
        np.testing.assert_allclose(v, 1.0)
    assert not same["matvec_degraded"]

    other, _ = _report_for(1, 16, 2, 1, 8, 1)
    other.config["p"] = 3
    with pytest.raises(ValueError):
        improvement_report(other, report)


def test_improvement_report_riga_vs_iga():
    iga, _ = _report_for(1, 32, 3, 0, 20, 2)
    riga, _ = _report_for(1, 32, 3, 2, 20, 2)
    rep = improvement_report(riga, iga)
    assert rep["flops"]["fact"] > 1.0  # partitioning cheapens the factorization
    assert riga.ratios_vs_baseline["flops"] == rep["flops"]
