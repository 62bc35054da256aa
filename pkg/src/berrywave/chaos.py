"""Hermite functionals of one wave realization and their wire format.

The sample trispectrum is the midpoint-rule integral of H4(field) over the
domain, with the integrand evaluated at cell centers from the analytic mode
sum (no interpolation).  Six related integrals in the field and its two
unit-variance partial derivatives feed the degree-4 projection; the
rescaled trispectrum statistic is the single-integral surrogate the
experiments compare against the nodal length.

Rescaling constants: m_stat = -(sqrt(2 pi^2 E) / 96) h4 and
l4 = (sqrt(2 pi^2 E) / 128)(8 a1 - a2 - a3 - 2 a4 - 8 a5 - 8 a6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .specfun import hermite

__all__ = [
    "ChaosRecord",
    "RecordParseError",
    "trispectrum",
    "m_statistic",
    "chaos4_terms",
    "chaos4_projection",
    "records_to_csv",
    "read_records_csv",
    "CSV_COLUMNS",
]

CSV_SCHEMA = "berrywave.records/1"
CSV_COLUMNS = ("replication_index", "E", "nodal_len", "h4", "m_stat",
               "a1", "a2", "a3", "a4", "a5", "a6", "l4")

_REL_TOL = 1e-12


class RecordParseError(ValueError):
    """A records CSV could not be parsed; carries the path and row number."""

    def __init__(self, path, row, message):
        super().__init__(f"{path}, row {row}: {message}")
        self.path = str(path)
        self.row = row


def _check_energy(energy):
    if not (np.isfinite(energy) and energy > 0):
        raise ValueError("energy must be finite and positive")


def _box_integral(plane, spacing):
    # midpoint rule: one value per cell, cell area spacing^2
    return float(np.sum(plane)) * spacing * spacing


def trispectrum(grid):
    """Midpoint-rule integral of H4(field) over the domain."""
    centers = grid.center_planes()[0]
    return _box_integral(hermite(4, centers), grid.spacing)


def m_statistic(energy, h4):
    """Rescaled trispectrum statistic: -(sqrt(2 pi^2 E) / 96) * h4."""
    _check_energy(energy)
    return float(-math.sqrt(2.0 * math.pi ** 2 * energy) / 96.0 * h4)


def chaos4_terms(grid):
    """The six degree-4 integrals of one realization, midpoint rule.

    Returns array [a1..a6]: H4 of the field and of each normalized
    derivative, then the three mixed H2 products (d1*d2, field*d1,
    field*d2).  a1 coincides with trispectrum(grid).
    """
    b, d1, d2 = grid.center_planes()
    h = grid.spacing
    h2_b = hermite(2, b)
    h2_d1 = hermite(2, d1)
    h2_d2 = hermite(2, d2)
    return np.array([
        trispectrum(grid),
        _box_integral(hermite(4, d1), h),
        _box_integral(hermite(4, d2), h),
        _box_integral(h2_d1 * h2_d2, h),
        _box_integral(h2_b * h2_d1, h),
        _box_integral(h2_b * h2_d2, h),
    ])


def chaos4_projection(energy, terms):
    """Degree-4 projection of the nodal length from the six integrals:
    (sqrt(2 pi^2 E) / 128) * (8 a1 - a2 - a3 - 2 a4 - 8 a5 - 8 a6)."""
    _check_energy(energy)
    t = np.asarray(terms, dtype=float)
    if t.shape != (6,):
        raise ValueError("terms must hold exactly six integrals")
    combo = 8.0 * t[0] - t[1] - t[2] - 2.0 * t[3] - 8.0 * t[4] - 8.0 * t[5]
    return float(math.sqrt(2.0 * math.pi ** 2 * energy) / 128.0 * combo)


def _close(x, y):
    return math.isclose(x, y, rel_tol=_REL_TOL, abs_tol=_REL_TOL)


@dataclass(frozen=True)
class ChaosRecord:
    """Per-replication scalars: nodal length, trispectrum, the six degree-4
    integrals, and the two rescaled statistics.  The linear identities
    between them are checked at construction."""

    replication_index: int
    energy: float
    nodal_len: float
    h4: float
    m_stat: float
    a: tuple
    l4: float

    def __post_init__(self):
        # coerce to plain floats so CSV reprs are canonical
        for name in ("energy", "nodal_len", "h4", "m_stat", "l4"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        if self.replication_index < 0:
            raise ValueError("replication_index must be non-negative")
        _check_energy(self.energy)
        if len(self.a) != 6:
            raise ValueError("a must hold six integrals")
        if not _close(self.a[0], self.h4):
            raise ValueError("a1 does not match h4")
        if not _close(self.m_stat, m_statistic(self.energy, self.h4)):
            raise ValueError("m_stat does not match its defining rescaling of h4")
        if not _close(self.l4, chaos4_projection(self.energy, np.array(self.a))):
            raise ValueError("l4 does not match the degree-4 projection of a1..a6")

    def to_csv_row(self):
        vals = [str(self.replication_index), repr(self.energy), repr(self.nodal_len),
                repr(self.h4), repr(self.m_stat)]
        vals += [repr(x) for x in self.a]
        vals.append(repr(self.l4))
        return ",".join(vals)


def records_to_csv(records, path):
    """Write records in the versioned CSV wire format."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        f.write(f"# {CSV_SCHEMA}\n")
        f.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            f.write(rec.to_csv_row() + "\n")


def read_records_csv(path):
    """Read a records CSV written by records_to_csv.

    Raises RecordParseError naming the file and row on any malformed
    content, including an empty record set.
    """
    path = Path(path)
    records = []
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != f"# {CSV_SCHEMA}":
        raise RecordParseError(path, 1, f"missing schema marker '# {CSV_SCHEMA}'")
    row = 0
    body = []
    for line in lines:
        row += 1
        if line.startswith("#") or not line.strip():
            continue
        body.append((row, line))
    if not body:
        raise RecordParseError(path, 0, "no header found")
    header_row, header = body[0]
    if tuple(header.split(",")) != CSV_COLUMNS:
        raise RecordParseError(path, header_row, f"unexpected header {header!r}")
    for row, line in body[1:]:
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise RecordParseError(path, row, f"expected {len(CSV_COLUMNS)} fields, got {len(parts)}")
        try:
            rec = ChaosRecord(
                replication_index=int(parts[0]),
                energy=float(parts[1]),
                nodal_len=float(parts[2]),
                h4=float(parts[3]),
                m_stat=float(parts[4]),
                a=tuple(float(x) for x in parts[5:11]),
                l4=float(parts[11]),
            )
        except ValueError as exc:
            raise RecordParseError(path, row, str(exc)) from exc
        records.append(rec)
    if not records:
        raise RecordParseError(path, row, "no data rows")
    return records
