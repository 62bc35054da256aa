"""Monte Carlo experiment harness over energy sweeps.

Replications are the unit of parallelism.  Each replication's stream is
keyed by (base_seed, replication_index), records are collected and
persisted in replication order, and every aggregate is computed with
fixed-order reductions, so identical plans produce byte-identical outputs
for any worker count.

Standardization convention: standardized vectors use the population
(ddof=0) standard deviation, which makes mean((L~ - M~)^2) equal
2 (1 - corr) to machine precision.  Reported variance estimates use the
unbiased (ddof=1) form.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as scistats

from .chaos import (CSV_COLUMNS, CSV_SCHEMA, ChaosRecord, chaos4_projection,
                    chaos4_terms, m_statistic, read_records_csv)
from .nodal import mean_length_formula, nodal_length
from .oracle import slope_fit, var_m_oracle, variance_log_slope
from .randomwave import (ConfigurationError, Domain, WaveConfig, rng_stream,
                         sample_field)

__all__ = [
    "ExperimentPlan",
    "EnergyStats",
    "EnsembleResult",
    "CltVerdict",
    "TrendRecord",
    "record_from_grid",
    "simulate_replication",
    "run_ensemble",
    "summarize_records",
    "k_statistic_4",
    "w1_to_standard_normal",
    "ks_statistic",
    "clt_verdict",
    "cumulant_trend",
    "build_summary",
    "write_report_files",
    "report",
]

_BOOT_TAG = 0xB0075
_REPORT_SEED = 20260816
_DEFAULT_BOOTSTRAP = 400


@dataclass(frozen=True)
class ExperimentPlan:
    """A sweep: which energies, how many replications, and the sampling
    defaults shared by every configuration."""

    energies: tuple
    replications: int
    base_seed: int
    domain: Domain = field(default_factory=lambda: Domain(1.0))
    grid_per_wavelength: int = 10
    modes_coeff: int = 4
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self):
        energies = tuple(float(e) for e in self.energies)
        object.__setattr__(self, "energies", energies)
        if not energies:
            raise ConfigurationError("plan needs at least one energy")
        if any(not (np.isfinite(e) and e > 0) for e in energies):
            raise ConfigurationError("energies must be finite and positive")
        if any(b >= a for a, b in zip(energies[1:], energies[:-1])):
            raise ConfigurationError("energies must be strictly increasing")
        if self.replications < 4:
            # the summaries include a fourth k-statistic
            raise ConfigurationError("need at least 4 replications")
        if not (0 <= self.base_seed < 2 ** 64):
            raise ConfigurationError("base_seed must fit an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    def config_for(self, energy, replication_index):
        return WaveConfig.from_rules(
            energy, self.domain, self.base_seed, replication_index,
            grid_per_wavelength=self.grid_per_wavelength,
            modes_coeff=self.modes_coeff)


@dataclass
class EnergyStats:
    """Aggregates of one energy's replication ensemble."""

    energy: float
    replications: int
    mean_nodal: float
    var_nodal: float
    mean_m: float
    var_m: float
    mean_l4: float
    var_l4: float
    mean_h4: float
    var_h4: float
    corr_lm: float
    corr_residual: float
    msq_lm: float
    ks_stat: float
    ks_pvalue: float
    w1_stat: float
    k4: float
    se: dict
    std_nodal: np.ndarray
    std_m: np.ndarray


@dataclass
class CltVerdict:
    energy: float
    replications: int
    ks_stat: float
    ks_pvalue: float
    w1_stat: float
    passed: bool | None
    inconclusive: bool


@dataclass
class TrendRecord:
    energies: tuple
    k4: tuple
    se_k4: tuple
    passed: bool | None
    inconclusive: bool


@dataclass
class EnsembleResult:
    plan: ExperimentPlan
    stats: tuple
    records: dict  # energy -> list[ChaosRecord]


def record_from_grid(grid):
    """Trace the zero set, integrate the Hermite functionals, and assemble
    the record for one already-sampled realization."""
    curve = nodal_length(grid)
    terms = chaos4_terms(grid)
    h4 = float(terms[0])
    energy = grid.config.energy
    return ChaosRecord(
        replication_index=grid.config.replication_index,
        energy=energy,
        nodal_len=curve.total_length,
        h4=h4,
        m_stat=m_statistic(energy, h4),
        a=tuple(float(x) for x in terms),
        l4=chaos4_projection(energy, terms),
    )


def simulate_replication(config):
    """One replication: sample the field, then measure it."""
    return record_from_grid(sample_field(config))


def _run_energy(plan, energy, on_record):
    configs = [plan.config_for(energy, i) for i in range(plan.replications)]
    records = [None] * plan.replications
    if plan.workers == 1:
        for i, cfg in enumerate(configs):
            records[i] = simulate_replication(cfg)
            if on_record is not None:
                on_record(records[i])
    else:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            futures = [pool.submit(simulate_replication, cfg) for cfg in configs]
            # collect in replication order regardless of completion order
            for i, fut in enumerate(futures):
                records[i] = fut.result()
                if on_record is not None:
                    on_record(records[i])
    return records


def run_ensemble(plan, on_record=None):
    """Run the full sweep and aggregate per-energy statistics.

    Every configuration in the plan is validated before any sampling work,
    so an unsatisfiable plan fails fast.  When plan.output_path is set the
    per-replication records are appended to that CSV as they complete
    (replication order); a failure mid-run leaves the rows written so far.
    """
    for energy in plan.energies:
        plan.config_for(energy, 0).validate()

    writer = None
    sink = on_record
    if plan.output_path is not None:
        out = Path(plan.output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        writer = open(out, "w", newline="")
        writer.write(f"# {CSV_SCHEMA}\n")
        writer.write(",".join(CSV_COLUMNS) + "\n")

        def sink(rec, _user=on_record):
            writer.write(rec.to_csv_row() + "\n")
            writer.flush()
            if _user is not None:
                _user(rec)

    try:
        records = {}
        stats = []
        for idx, energy in enumerate(plan.energies):
            recs = _run_energy(plan, energy, sink)
            records[energy] = recs
            stats.append(summarize_records(
                recs, boot_stream=rng_stream(plan.base_seed, idx, _BOOT_TAG)))
    finally:
        if writer is not None:
            writer.close()
    return EnsembleResult(plan=plan, stats=tuple(stats), records=records)


def k_statistic_4(x):
    """Fourth k-statistic, the unbiased estimator of the fourth cumulant."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise ValueError("k_statistic_4 needs a 1-d sample of size >= 4")
    return float(_k4_rows(x[None, :])[0])


def _k4_rows(x):
    n = x.shape[-1]
    c = x - x.mean(axis=-1, keepdims=True)
    m2 = (c * c).mean(axis=-1)
    m4 = (c ** 4).mean(axis=-1)
    return n * n * ((n + 1) * m4 - 3.0 * (n - 1) * m2 * m2) / ((n - 1) * (n - 2) * (n - 3))


def _norm_quantile_pdf(t):
    # g(t) = phi(Phi^{-1}(t)); g(0) = g(1) = 0
    return scistats.norm.pdf(scistats.norm.ppf(t))


def _w1_sorted_rows(xs):
    n = xs.shape[-1]
    lo = np.arange(n, dtype=float) / n
    hi = np.arange(1, n + 1, dtype=float) / n
    c = np.clip(scistats.norm.cdf(xs), lo, hi)
    g_lo = _norm_quantile_pdf(lo)
    g_hi = _norm_quantile_pdf(hi)
    g_c = _norm_quantile_pdf(c)
    part = xs * ((c - lo) - (hi - c)) - g_lo + 2.0 * g_c - g_hi
    return part.sum(axis=-1)


def w1_to_standard_normal(x):
    """Order-1 transport distance between the empirical law of x and the
    standard normal, computed exactly from the quantile coupling."""
    x = np.sort(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size == 0:
        raise ValueError("w1_to_standard_normal needs a non-empty 1-d sample")
    return float(_w1_sorted_rows(x[None, :])[0])


def _ks_sorted_rows(xs):
    n = xs.shape[-1]
    cdf = scistats.norm.cdf(xs)
    upper = np.arange(1, n + 1, dtype=float) / n
    lower = np.arange(n, dtype=float) / n
    return np.maximum(upper - cdf, cdf - lower).max(axis=-1)


def ks_statistic(x):
    """Kolmogorov-Smirnov statistic of x against the standard normal."""
    x = np.sort(np.asarray(x, dtype=float))
    return float(_ks_sorted_rows(x[None, :])[0])


def _standardize_rows(x):
    mu = x.mean(axis=-1, keepdims=True)
    sd = x.std(axis=-1, keepdims=True)
    # constant bootstrap resamples standardize to all zeros instead of NaN
    return (x - mu) / np.where(sd == 0.0, 1.0, sd)


def _row_corr(x, y):
    cx = x - x.mean(axis=-1, keepdims=True)
    cy = y - y.mean(axis=-1, keepdims=True)
    num = (cx * cy).sum(axis=-1)
    den = np.sqrt((cx * cx).sum(axis=-1) * (cy * cy).sum(axis=-1))
    # constant resamples have no defined correlation; report 0 rather than NaN.
    # rounding can also push a perfect correlation a few ulp past +-1.
    out = np.divide(num, den, out=np.zeros_like(num), where=den > 0.0)
    return np.clip(out, -1.0, 1.0)


def summarize_records(records, boot_stream=None, bootstrap_rounds=_DEFAULT_BOOTSTRAP):
    """Aggregate one energy's records into EnergyStats with bootstrap SEs."""
    if len(records) < 4:
        raise ValueError("need at least 4 records to summarize")
    energy = records[0].energy
    if any(r.energy != energy for r in records):
        raise ValueError("records mix energies")
    n = len(records)
    nodal = np.array([r.nodal_len for r in records])
    m = np.array([r.m_stat for r in records])
    l4 = np.array([r.l4 for r in records])
    h4 = np.array([r.h4 for r in records])
    resid = nodal - l4

    for name, arr in (("nodal_len", nodal), ("m_stat", m)):
        if arr.std() == 0:
            raise ValueError(f"{name} is degenerate (zero spread)")

    std_nodal = _standardize_rows(nodal[None, :])[0]
    std_m = _standardize_rows(m[None, :])[0]
    corr_lm = float(_row_corr(nodal[None, :], m[None, :])[0])
    corr_residual = float(_row_corr(resid[None, :], m[None, :])[0])
    msq_lm = float(np.mean((std_nodal - std_m) ** 2))

    ks_res = scistats.kstest(std_nodal, "norm")
    w1 = w1_to_standard_normal(std_nodal)
    k4 = k_statistic_4(std_m)

    if boot_stream is None:
        boot_stream = rng_stream(0, 0, _BOOT_TAG)
    idx = boot_stream.integers(0, n, size=(bootstrap_rounds, n))
    bl, bm, bl4, bh4, bres = nodal[idx], m[idx], l4[idx], h4[idx], resid[idx]
    se = {}
    for name, arr in (("nodal", bl), ("m", bm), ("l4", bl4), ("h4", bh4)):
        se["mean_" + name] = float(arr.mean(axis=1).std(ddof=1))
        se["var_" + name] = float(arr.var(axis=1, ddof=1).std(ddof=1))
    se["corr_lm"] = float(_row_corr(bl, bm).std(ddof=1))
    se["corr_residual"] = float(_row_corr(bres, bm).std(ddof=1))
    std_rows_l = np.sort(_standardize_rows(bl), axis=1)
    se["ks_stat"] = float(_ks_sorted_rows(std_rows_l).std(ddof=1))
    se["w1_stat"] = float(_w1_sorted_rows(std_rows_l).std(ddof=1))
    se["k4"] = float(_k4_rows(_standardize_rows(bm)).std(ddof=1))

    out = EnergyStats(
        energy=energy,
        replications=n,
        mean_nodal=float(nodal.mean()), var_nodal=float(nodal.var(ddof=1)),
        mean_m=float(m.mean()), var_m=float(m.var(ddof=1)),
        mean_l4=float(l4.mean()), var_l4=float(l4.var(ddof=1)),
        mean_h4=float(h4.mean()), var_h4=float(h4.var(ddof=1)),
        corr_lm=corr_lm, corr_residual=corr_residual, msq_lm=msq_lm,
        ks_stat=float(ks_res.statistic), ks_pvalue=float(ks_res.pvalue),
        w1_stat=w1, k4=k4, se=se,
        std_nodal=std_nodal, std_m=std_m,
    )
    _check_stats(out)
    return out


def _check_stats(s):
    if abs(float(s.std_nodal.mean())) > 1e-12 or abs(float(s.std_nodal.var()) - 1.0) > 1e-12:
        raise ValueError("standardization failed for nodal lengths")
    if abs(float(s.std_m.mean())) > 1e-12 or abs(float(s.std_m.var()) - 1.0) > 1e-12:
        raise ValueError("standardization failed for the trispectrum statistic")
    if not (-1.0 <= s.corr_lm <= 1.0 and -1.0 <= s.corr_residual <= 1.0):
        raise ValueError("correlation out of range")
    if not (0.0 <= s.ks_stat <= 1.0):
        raise ValueError("KS statistic out of range")
    for name in ("var_nodal", "var_m", "var_l4", "var_h4", "w1_stat"):
        if getattr(s, name) < 0:
            raise ValueError(f"{name} must be non-negative")


def clt_verdict(stats, min_replications=100, level=0.01):
    """Pass/fail of the KS test at the given level; fewer than
    min_replications replications yields an inconclusive verdict."""
    if stats.replications < min_replications:
        return CltVerdict(stats.energy, stats.replications, stats.ks_stat,
                          stats.ks_pvalue, stats.w1_stat, passed=None,
                          inconclusive=True)
    return CltVerdict(stats.energy, stats.replications, stats.ks_stat,
                      stats.ks_pvalue, stats.w1_stat,
                      passed=bool(stats.ks_pvalue >= level), inconclusive=False)


def cumulant_trend(results, min_replications=2000):
    """Trend of the fourth k-statistic of the standardized trispectrum
    statistic across energies.

    Qualifying energies are those with at least min_replications
    replications; fewer than two of them makes the verdict inconclusive.
    Passes when k4 at the largest qualifying energy does not exceed k4 at
    the smallest, or when both are within two bootstrap SEs of zero.
    """
    stats = results.stats if hasattr(results, "stats") else tuple(results)
    qual = [s for s in stats if s.replications >= min_replications]
    if len(qual) < 2:
        return TrendRecord(
            energies=tuple(s.energy for s in qual),
            k4=tuple(s.k4 for s in qual),
            se_k4=tuple(s.se["k4"] for s in qual),
            passed=None, inconclusive=True)
    qual.sort(key=lambda s: s.energy)
    lowest, highest = qual[0], qual[-1]
    small = (abs(lowest.k4) <= 2.0 * lowest.se["k4"]
             and abs(highest.k4) <= 2.0 * highest.se["k4"])
    passed = bool(highest.k4 <= lowest.k4 or small)
    return TrendRecord(
        energies=tuple(s.energy for s in qual),
        k4=tuple(s.k4 for s in qual),
        se_k4=tuple(s.se["k4"] for s in qual),
        passed=passed, inconclusive=False)


def _stats_block(s, domain):
    return {
        "replications": s.replications,
        "mean_nodal_len": s.mean_nodal,
        "var_nodal_len": s.var_nodal,
        "mean_m_stat": s.mean_m,
        "var_m_stat": s.var_m,
        "mean_l4": s.mean_l4,
        "var_l4": s.var_l4,
        "mean_h4": s.mean_h4,
        "var_h4": s.var_h4,
        "mean_length_formula": mean_length_formula(s.energy, domain),
        "var_m_oracle": var_m_oracle(s.energy, domain),
        "corr_lm": s.corr_lm,
        "corr_residual": s.corr_residual,
        "msq_lm": s.msq_lm,
        "ks_stat": s.ks_stat,
        "ks_pvalue": s.ks_pvalue,
        "w1_stat": s.w1_stat,
        "k4": s.k4,
        "se": dict(s.se),
    }


def build_summary(stats_list, domain, min_trend_replications=2000):
    """Assemble the JSON-ready summary for a set of per-energy statistics."""
    stats_list = sorted(stats_list, key=lambda s: s.energy)
    summary = {
        "schema": "berrywave.summary/1",
        "domain_side": domain.side,
        "energies": [s.energy for s in stats_list],
        "per_energy": {},
        "verdicts": [],
    }
    for s in stats_list:
        block = _stats_block(s, domain)
        v = clt_verdict(s)
        block["clt"] = {"passed": v.passed, "inconclusive": v.inconclusive}
        summary["per_energy"][repr(s.energy)] = block
        summary["verdicts"].append({
            "name": f"clt@{s.energy:g}",
            "passed": v.passed,
            "inconclusive": v.inconclusive,
        })
    if len(stats_list) >= 3:
        energies = [s.energy for s in stats_list]
        fitted_slope, fitted_icpt = slope_fit(energies, [s.var_m for s in stats_list])
        oracle_vals = [summary["per_energy"][repr(e)]["var_m_oracle"] for e in energies]
        oracle_slope, oracle_icpt = slope_fit(energies, oracle_vals)
        summary["slope"] = {
            "var_m_vs_log_energy": fitted_slope,
            "intercept": fitted_icpt,
            "oracle_slope": oracle_slope,
            "oracle_intercept": oracle_icpt,
            "asymptotic_slope": variance_log_slope(domain),
        }
    trend = cumulant_trend(stats_list, min_replications=min_trend_replications)
    if not trend.inconclusive or trend.energies:
        summary["trend"] = {
            "energies": list(trend.energies),
            "k4": list(trend.k4),
            "se_k4": list(trend.se_k4),
            "passed": trend.passed,
            "inconclusive": trend.inconclusive,
        }
    if not trend.inconclusive:
        summary["verdicts"].append({
            "name": "cumulant_trend",
            "passed": trend.passed,
            "inconclusive": False,
        })
    return summary


def _write_dat(path, header, rows):
    with open(path, "w") as f:
        f.write("# " + " ".join(header) + "\n")
        for row in rows:
            f.write(" ".join(repr(float(x)) for x in row) + "\n")


def write_report_files(summary, out_dir):
    """Write summary.json plus the gnuplot-ready .dat companions."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    energies = summary["energies"]
    blocks = [summary["per_energy"][repr(e)] for e in energies]
    _write_dat(out / "corr_vs_energy.dat",
               ["energy", "corr_lm", "se_corr_lm", "msq_lm", "corr_residual", "se_corr_residual"],
               [(e, b["corr_lm"], b["se"]["corr_lm"], b["msq_lm"],
                 b["corr_residual"], b["se"]["corr_residual"])
                for e, b in zip(energies, blocks)])
    _write_dat(out / "var_vs_log_energy.dat",
               ["log_energy", "var_m_stat", "se_var_m", "var_m_oracle",
                "var_nodal_len", "se_var_nodal", "var_l4"],
               [(math.log(e), b["var_m_stat"], b["se"]["var_m"], b["var_m_oracle"],
                 b["var_nodal_len"], b["se"]["var_nodal"], b["var_l4"])
                for e, b in zip(energies, blocks)])
    _write_dat(out / "distance_vs_energy.dat",
               ["energy", "ks_stat", "se_ks", "ks_pvalue", "w1_stat", "se_w1"],
               [(e, b["ks_stat"], b["se"]["ks_stat"], b["ks_pvalue"],
                 b["w1_stat"], b["se"]["w1_stat"])
                for e, b in zip(energies, blocks)])
    return out / "summary.json"


def report(record_paths, out_dir, side=1.0, bootstrap_rounds=_DEFAULT_BOOTSTRAP):
    """Aggregate persisted record CSVs into a summary and plot data.

    Parse failures raise RecordParseError naming the file and row; an empty
    record set does too.  Returns the summary dict after writing
    summary.json and the .dat files to out_dir.
    """
    all_records = []
    for p in record_paths:
        all_records.extend(read_records_csv(p))
    by_energy = {}
    for rec in all_records:
        by_energy.setdefault(rec.energy, []).append(rec)
    stats_list = []
    for idx, energy in enumerate(sorted(by_energy)):
        stats_list.append(summarize_records(
            by_energy[energy],
            boot_stream=rng_stream(_REPORT_SEED, idx, _BOOT_TAG),
            bootstrap_rounds=bootstrap_rounds))
    domain = Domain(side)
    summary = build_summary(stats_list, domain)
    write_report_files(summary, out_dir)
    return summary
