"""Shared fixtures: the acceptance ensembles are expensive, so they are
built once per session and reused by every test that needs them."""

import json
from pathlib import Path

import numpy as np
import pytest

import berrywave as bw
from berrywave.harness import record_from_grid, summarize_records
from berrywave.randomwave import rng_stream

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def accept_cfg():
    return json.loads((DATA / "acceptance_config.json").read_text())


@pytest.fixture(scope="session")
def domain(accept_cfg):
    return bw.Domain(accept_cfg["side"])


def _run_energy(energy, replications, seed, gpw, domain, probe_cfg=None):
    """Replication loop that also evaluates covariance probes when asked:
    field values along a horizontal and a diagonal ray from a fixed origin,
    so product moments against the model covariance can be formed later."""
    records = []
    probes = []
    rr = None
    if probe_cfg is not None:
        lam = 1.0 / np.sqrt(energy)
        rr = np.linspace(0.0, probe_cfg["span_wavelengths"] * lam,
                         probe_cfg["r_points"])
        x0 = probe_cfg["origin"]
    for i in range(replications):
        cfg = bw.WaveConfig.from_rules(energy, domain, seed=seed,
                                       replication_index=i,
                                       grid_per_wavelength=gpw)
        grid = bw.sample_field(cfg)
        records.append(record_from_grid(grid))
        if probe_cfg is not None:
            horiz = grid.evaluate(x0 + rr, np.array([x0]))[0][:, 0]
            ax = x0 + rr / np.sqrt(2.0)
            diag = np.diagonal(grid.evaluate(ax, ax)[0]).copy()
            probes.append(np.stack([horiz, diag]))
    out = {"records": records, "energy": energy}
    if probe_cfg is not None:
        out["probes"] = np.array(probes)
        out["r_grid"] = rr
    return out


@pytest.fixture(scope="session")
def ens25(accept_cfg, domain):
    c = accept_cfg
    return _run_energy(25.0, c["replications"]["25"], c["base_seed"],
                       c["grid_per_wavelength"], domain, probe_cfg=c["probe"])


@pytest.fixture(scope="session")
def ens100(accept_cfg, domain):
    c = accept_cfg
    return _run_energy(100.0, c["replications"]["100"], c["base_seed"],
                       c["grid_per_wavelength"], domain)


@pytest.fixture(scope="session")
def ens400(accept_cfg, domain):
    c = accept_cfg
    return _run_energy(400.0, c["replications"]["400"], c["base_seed"],
                       c["grid_per_wavelength"], domain)


@pytest.fixture(scope="session")
def crit2_lengths(accept_cfg, domain):
    c = accept_cfg["mean_length_run"]
    out = _run_energy(c["energy"], c["replications"], accept_cfg["base_seed"],
                      c["grid_per_wavelength"], domain)
    return np.array([r.nodal_len for r in out["records"]])


def stats_for(records, boot_seed, *tags):
    """Summarize with a deterministic bootstrap stream so verdicts are
    reproducible run to run."""
    return summarize_records(records, boot_stream=rng_stream(boot_seed, 0, *tags))
