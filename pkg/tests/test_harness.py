import json
import math

import numpy as np
import pytest
from scipy import integrate, stats as scistats

from berrywave.chaos import (ChaosRecord, RecordParseError, chaos4_projection,
                             m_statistic, read_records_csv)
from berrywave.harness import (CltVerdict, EnsembleResult, ExperimentPlan,
                               build_summary, clt_verdict, cumulant_trend,
                               k_statistic_4, ks_statistic, report,
                               run_ensemble, summarize_records,
                               w1_to_standard_normal, write_report_files)
from berrywave.randomwave import ConfigurationError, Domain, rng_stream


def fab_records(energy, nodal, m_vals):
    """Fabricated records with the linear identities satisfied, so harness
    statistics can be exercised on arbitrary numbers."""
    c = math.sqrt(2.0 * math.pi ** 2 * energy)
    recs = []
    for i, (length, mv) in enumerate(zip(nodal, m_vals)):
        h4 = -96.0 * float(mv) / c
        a = (h4, 0.0, 0.0, 0.0, 0.0, 0.0)
        recs.append(ChaosRecord(
            replication_index=i, energy=energy, nodal_len=float(length),
            h4=h4, m_stat=m_statistic(energy, h4), a=a,
            l4=chaos4_projection(energy, a)))
    return recs


def normal_ensemble(energy, n, seed, loc=22.0, scale=0.5):
    stream = rng_stream(seed, 0)
    nodal = loc + scale * stream.standard_normal(n)
    m = 0.07 * stream.standard_normal(n)
    return fab_records(energy, nodal, m)


def test_plan_validation():
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(), replications=4, base_seed=0)
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(4.0, -1.0), replications=4, base_seed=0)
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(9.0, 4.0), replications=4, base_seed=0)
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(4.0, 4.0), replications=4, base_seed=0)
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(4.0,), replications=1, base_seed=0)
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(4.0,), replications=3, base_seed=0)
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(4.0,), replications=4, base_seed=2 ** 64)
    with pytest.raises(ConfigurationError):
        ExperimentPlan(energies=(4.0,), replications=4, base_seed=0, workers=0)
    plan = ExperimentPlan(energies=(4, 9), replications=4, base_seed=1)
    assert plan.energies == (4.0, 9.0)
    cfg = plan.config_for(9.0, 3)
    assert cfg.seed == 1 and cfg.replication_index == 3 and cfg.energy == 9.0


def test_unsatisfiable_plan_fails_before_writing(tmp_path):
    out = tmp_path / "records.csv"
    plan = ExperimentPlan(energies=(25.0,), replications=4, base_seed=0,
                          grid_per_wavelength=3, output_path=str(out))
    with pytest.raises(ConfigurationError):
        run_ensemble(plan)
    assert not out.exists()


def test_worker_determinism(tmp_path):
    outs = []
    for workers in (1, 3):
        out = tmp_path / f"records_w{workers}.csv"
        plan = ExperimentPlan(energies=(4.0,), replications=6, base_seed=5,
                              workers=workers, output_path=str(out))
        res = run_ensemble(plan)
        outs.append(out.read_bytes())
        assert [r.replication_index for r in res.records[4.0]] == list(range(6))
    assert outs[0] == outs[1]


def test_run_ensemble_persists_in_order(tmp_path):
    out = tmp_path / "records.csv"
    seen = []
    plan = ExperimentPlan(energies=(4.0, 9.0), replications=4, base_seed=2,
                          output_path=str(out))
    res = run_ensemble(plan, on_record=seen.append)
    assert isinstance(res, EnsembleResult)
    assert [s.energy for s in res.stats] == [4.0, 9.0]
    assert len(seen) == 8
    back = read_records_csv(out)
    assert back == res.records[4.0] + res.records[9.0]


def test_k_statistic_values():
    assert abs(k_statistic_4(np.array([-1.0, 0.0, 0.0, 1.0])) - 2.0 / 3.0) <= 1e-12
    with pytest.raises(ValueError):
        k_statistic_4(np.array([1.0, 2.0, 3.0]))
    stream = rng_stream(12, 0)
    z = stream.standard_normal(4000)
    assert abs(k_statistic_4(z)) <= 5.0 * math.sqrt(24.0 / z.size)
    chi = stream.standard_normal(4000) ** 2
    chi = (chi - chi.mean()) / chi.std()
    assert k_statistic_4(chi) > 4.0


def test_w1_single_point():
    # W1 between a point mass at 0 and the standard normal is E|Z|
    assert abs(w1_to_standard_normal(np.array([0.0]))
               - math.sqrt(2.0 / math.pi)) <= 1e-12


def test_w1_brute_force_match():
    stream = rng_stream(31, 0)
    x = np.sort(stream.standard_normal(8))
    n = x.size
    total = 0.0
    for i in range(n):
        lo, hi = i / n, (i + 1) / n
        c = scistats.norm.cdf(x[i])
        pts = [c] if lo < c < hi else None
        piece, _ = integrate.quad(
            lambda t, xi=x[i]: abs(xi - scistats.norm.ppf(t)),
            lo, hi, points=pts, limit=300)
        total += piece
    assert abs(w1_to_standard_normal(x) - total) <= 5e-6


def test_w1_shrinks_with_fit():
    # ideal normal quantiles give a much smaller distance than a shifted set
    n = 400
    q = scistats.norm.ppf((np.arange(n) + 0.5) / n)
    assert w1_to_standard_normal(q) < 0.01
    assert w1_to_standard_normal(q + 1.0) > 0.9
    with pytest.raises(ValueError):
        w1_to_standard_normal(np.array([]))


def test_ks_statistic_matches_scipy():
    stream = rng_stream(44, 0)
    x = stream.standard_normal(100)
    ours = ks_statistic(x)
    ref = scistats.kstest(x, "norm").statistic
    assert abs(ours - ref) <= 1e-12


def test_summarize_validation():
    recs = normal_ensemble(4.0, 50, seed=1)
    with pytest.raises(ValueError):
        summarize_records(recs[:1])
    mixed = recs[:25] + fab_records(9.0, [1.0] * 25, np.linspace(-1, 1, 25))
    with pytest.raises(ValueError):
        summarize_records(mixed)
    flat = fab_records(4.0, [2.0] * 30, np.linspace(-1, 1, 30))
    with pytest.raises(ValueError):
        summarize_records(flat)


def test_summarize_identities():
    recs = normal_ensemble(4.0, 300, seed=7)
    s = summarize_records(recs, boot_stream=rng_stream(7, 0, 9))
    assert abs(s.msq_lm - 2.0 * (1.0 - s.corr_lm)) <= 1e-10
    assert abs(float(s.std_nodal.mean())) <= 1e-12
    assert abs(float(s.std_nodal.var()) - 1.0) <= 1e-12
    nodal = np.array([r.nodal_len for r in recs])
    assert abs(s.mean_nodal - nodal.mean()) <= 1e-12
    assert abs(s.var_nodal - nodal.var(ddof=1)) <= 1e-12
    assert abs(s.ks_stat - ks_statistic(s.std_nodal)) <= 1e-12
    assert abs(s.w1_stat - w1_to_standard_normal(s.std_nodal)) <= 1e-12
    assert abs(s.k4 - k_statistic_4(s.std_m)) <= 1e-12
    expected_se_keys = {
        "mean_nodal", "var_nodal", "mean_m", "var_m", "mean_l4", "var_l4",
        "mean_h4", "var_h4", "corr_lm", "corr_residual", "ks_stat",
        "w1_stat", "k4"}
    assert set(s.se) == expected_se_keys
    assert all(v >= 0.0 for v in s.se.values())


def test_summarize_perfect_correlation():
    m = np.linspace(-0.2, 0.2, 64)
    lengths = 22.0 + m  # nodal length moves one-for-one with the statistic
    s = summarize_records(fab_records(4.0, lengths, m))
    assert abs(s.corr_lm - 1.0) <= 1e-12
    assert s.msq_lm <= 1e-12


def test_bootstrap_determinism():
    recs = normal_ensemble(4.0, 120, seed=3)
    a = summarize_records(recs, boot_stream=rng_stream(5, 0, 1))
    b = summarize_records(recs, boot_stream=rng_stream(5, 0, 1))
    c = summarize_records(recs, boot_stream=rng_stream(5, 0, 2))
    assert a.se == b.se
    assert a.se != c.se


def test_clt_verdict_branches():
    small = summarize_records(normal_ensemble(4.0, 60, seed=2))
    v = clt_verdict(small)
    assert v.inconclusive and v.passed is None
    good = summarize_records(normal_ensemble(4.0, 400, seed=8))
    v = clt_verdict(good)
    assert not v.inconclusive and v.passed is True
    stream = rng_stream(9, 0)
    skewed = np.exp(stream.standard_normal(400))
    bad = summarize_records(fab_records(4.0, 20.0 + skewed,
                                        0.1 * stream.standard_normal(400)))
    v = clt_verdict(bad)
    assert not v.inconclusive and v.passed is False
    assert isinstance(v, CltVerdict)


def test_cumulant_trend_branches():
    lo = summarize_records(normal_ensemble(4.0, 300, seed=21),
                           boot_stream=rng_stream(21, 0, 1))
    hi = summarize_records(normal_ensemble(9.0, 300, seed=22),
                           boot_stream=rng_stream(22, 0, 1))
    trend = cumulant_trend([lo, hi], min_replications=2000)
    assert trend.inconclusive and trend.passed is None
    trend = cumulant_trend([lo, hi], min_replications=100)
    assert not trend.inconclusive and trend.passed is True
    # heavy-tailed statistic at the higher energy flips the verdict
    stream = rng_stream(23, 0)
    heavy = summarize_records(
        fab_records(9.0, 22.0 + 0.5 * stream.standard_normal(300),
                    0.1 * stream.standard_t(3, size=300)),
        boot_stream=rng_stream(23, 0, 1))
    if heavy.k4 > lo.k4 and abs(heavy.k4) > 2 * heavy.se["k4"]:
        trend = cumulant_trend([lo, heavy], min_replications=100)
        assert trend.passed is False


def test_cumulant_trend_accepts_ensemble_result():
    plan = ExperimentPlan(energies=(4.0,), replications=4, base_seed=0)
    res = run_ensemble(plan)
    trend = cumulant_trend(res)
    assert trend.inconclusive


def test_build_summary_and_report_files(tmp_path):
    stats_list = [summarize_records(normal_ensemble(e, 150, seed=int(e)),
                                    boot_stream=rng_stream(int(e), 0, 4))
                  for e in (4.0, 9.0)]
    summary = build_summary(stats_list, Domain(1.0))
    assert summary["schema"] == "berrywave.summary/1"
    assert summary["energies"] == [4.0, 9.0]
    assert "slope" not in summary  # needs three energies
    names = [v["name"] for v in summary["verdicts"]]
    assert names == ["clt@4", "clt@9"]
    block = summary["per_energy"]["4.0"]
    assert "var_m_oracle" in block and "mean_length_formula" in block

    three = stats_list + [summarize_records(normal_ensemble(16.0, 150, seed=16),
                                            boot_stream=rng_stream(16, 0, 4))]
    summary3 = build_summary(three, Domain(1.0))
    assert "slope" in summary3
    assert abs(summary3["slope"]["asymptotic_slope"]
               - 1.0 / (512.0 * math.pi)) <= 1e-15

    path = write_report_files(summary3, tmp_path)
    assert path.name == "summary.json"
    written = json.loads(path.read_text())
    assert written == json.loads(json.dumps(summary3))
    for name in ("corr_vs_energy.dat", "var_vs_log_energy.dat",
                 "distance_vs_energy.dat"):
        lines = (tmp_path / name).read_text().strip().splitlines()
        assert lines[0].startswith("# ")
        assert len(lines) == 1 + 3


def test_report_round_trip(tmp_path):
    out = tmp_path / "records.csv"
    plan = ExperimentPlan(energies=(4.0, 9.0), replications=5, base_seed=4,
                          output_path=str(out))
    run_ensemble(plan)
    summary = report([out], tmp_path / "rep", bootstrap_rounds=50)
    assert (tmp_path / "rep" / "summary.json").exists()
    assert summary["energies"] == [4.0, 9.0]
    junk = tmp_path / "junk.csv"
    junk.write_text("nonsense\n")
    with pytest.raises(RecordParseError):
        report([junk], tmp_path / "rep2")
