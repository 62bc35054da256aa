"""Regenerate tests/data/bessel_j0_reference.npz.

The table is the unit-test oracle for bessel_j0.  The main arrays t/j0
hold the 10^4-point log-spaced grid on [0, 1e4] that the accuracy gate
sweeps; t_extra/j0_extra add a dense linear band plus points straddling
the series/asymptotic crossover and the first root.  Every value is
computed with mpmath at 80 significant digits.  For t <= 50 an explicit power
series with 240 terms is evaluated at the same precision and must agree
with mpmath's besselj to 30 digits before anything is written, so two
independent extended-precision routes vouch for each other; beyond t = 50
the series cancels too many digits to be the better oracle and besselj
alone is used.

Run from the repository root:

    python3 tests/make_bessel_reference.py
"""

from pathlib import Path

import numpy as np
from mpmath import besselj, mp, mpf

DPS = 80
SERIES_TERMS = 240
SERIES_LIMIT = 50.0
CROSS_CHECK_TOL = mpf(10) ** -30
OUT = Path(__file__).parent / "data" / "bessel_j0_reference.npz"


def j0_series(t, terms=SERIES_TERMS):
    q = -(mpf(t) ** 2) / 4
    term = mpf(1)
    total = mpf(1)
    for m in range(1, terms):
        term = term * q / (m * m)
        total += term
    return total


def gate_points():
    # the accuracy gate's grid: 10^4 points, log-spaced with the origin
    return np.concatenate([np.array([0.0]), np.geomspace(1e-3, 1e4, 9999)])


def extra_points():
    pieces = [
        np.linspace(0.05, 40.0, 2048),
        # both sides of the series/asymptotic crossover and the first root
        np.array([11.999999, 12.0, 12.000001]),
        2.404825557695773 + np.array([-1e-9, 0.0, 1e-9]),
    ]
    return np.unique(np.concatenate(pieces))


def evaluate(t):
    vals = np.empty_like(t)
    for i, x in enumerate(t):
        ref = besselj(0, mpf(x))
        if x <= SERIES_LIMIT:
            alt = j0_series(x)
            if abs(alt - ref) > CROSS_CHECK_TOL:
                raise AssertionError(f"series and besselj disagree at t={x!r}")
        vals[i] = float(ref)
    return vals


def main():
    mp.dps = DPS
    t = gate_points()
    t_extra = extra_points()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(OUT, t=t, j0=evaluate(t),
                        t_extra=t_extra, j0_extra=evaluate(t_extra),
                        meta_dps=np.array(DPS),
                        meta_series_terms=np.array(SERIES_TERMS))
    print(f"wrote {OUT} ({t.size} gate + {t_extra.size} extra points)")


if __name__ == "__main__":
    main()
