"""Command line front end.

Exit codes: 0 when every verdict passes or is inconclusive, 1 when a
verdict fails or output cannot be written, 2 on configuration or input
errors (argparse uses 2 for bad flags as well).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .chaos import RecordParseError
from .harness import ExperimentPlan, build_summary, report, run_ensemble
from .nodal import mean_length_formula
from .oracle import slope_fit, var_m_oracle, variance_log_slope
from .randomwave import ConfigurationError, Domain

_OUTDIR_ENV = "BERRYWAVE_OUTDIR"


def _energy_list(text):
    toks = [t.strip() for t in text.split(",") if t.strip()]
    if not toks:
        raise argparse.ArgumentTypeError("expected a comma-separated list of energies")
    try:
        return tuple(float(t) for t in toks)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad energy list: {text!r}")


def _add_common(p):
    p.add_argument("--side", type=float, default=1.0, help="side of the square domain")
    p.add_argument("--out-dir", type=Path, default=None,
                   help=f"output directory (default: ${_OUTDIR_ENV} or '.')")


def _add_run_flags(p):
    p.add_argument("--replications", type=int, required=True,
                   help="independent replications per energy")
    p.add_argument("--seed", type=int, default=0, help="base seed for all streams")
    p.add_argument("--grid-per-wavelength", type=int, default=10,
                   help="grid nodes per wavelength (resolution rule)")
    p.add_argument("--modes-per-wavelength", type=int, default=4,
                   help="plane-wave directions per unit of wavenumber times side")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    p.add_argument("--out", type=Path, default=None,
                   help="records CSV path (default: OUT_DIR/records.csv)")
    _add_common(p)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="berrywave",
        description="Nodal length and trispectrum statistics of planar random waves.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one energy and summarize it")
    sim.add_argument("--energy", type=float, required=True)
    _add_run_flags(sim)
    sim.set_defaults(func=_cmd_simulate)

    swp = sub.add_parser("sweep", help="run an increasing list of energies")
    swp.add_argument("--energies", type=_energy_list, required=True,
                     help="comma-separated energies, e.g. 25,100,400")
    _add_run_flags(swp)
    swp.set_defaults(func=_cmd_sweep)

    orc = sub.add_parser("oracle", help="deterministic mean/variance predictions")
    orc.add_argument("--energies", type=_energy_list, required=True)
    orc.add_argument("--out", type=Path, default=None,
                     help="oracle CSV path (default: OUT_DIR/oracle.csv)")
    _add_common(orc)
    orc.set_defaults(func=_cmd_oracle)

    rep = sub.add_parser("report", help="aggregate record CSVs into a summary")
    rep.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True,
                     help="record CSV files to aggregate")
    rep.add_argument("--bootstrap", type=int, default=400,
                     help="bootstrap resamples for standard errors")
    _add_common(rep)
    rep.set_defaults(func=_cmd_report)
    return parser


def _resolve_outdir(args):
    if args.out_dir is not None:
        return args.out_dir
    return Path(os.environ.get(_OUTDIR_ENV, "."))


def _print_verdicts(summary):
    failed = False
    for v in summary["verdicts"]:
        if v["inconclusive"]:
            state = "inconclusive"
        elif v["passed"]:
            state = "pass"
        else:
            state = "FAIL"
            failed = True
        print(f"{v['name']}: {state}")
    return failed


def _print_energy_lines(summary):
    for e in summary["energies"]:
        b = summary["per_energy"][repr(e)]
        print(f"energy {e:g}: R={b['replications']}"
              f" mean_len={b['mean_nodal_len']:.4f}"
              f" (formula {b['mean_length_formula']:.4f})"
              f" var_m={b['var_m_stat']:.3e}"
              f" (oracle {b['var_m_oracle']:.3e})"
              f" corr={b['corr_lm']:.4f}"
              f" ks_p={b['ks_pvalue']:.3f}")


def _run_and_summarize(args, energies):
    domain = Domain(args.side)
    out_dir = _resolve_outdir(args)
    records_path = args.out if args.out is not None else out_dir / "records.csv"
    plan = ExperimentPlan(
        energies=energies,
        replications=args.replications,
        base_seed=args.seed,
        domain=domain,
        grid_per_wavelength=args.grid_per_wavelength,
        modes_coeff=args.modes_per_wavelength,
        workers=args.workers,
        output_path=str(records_path),
    )
    result = run_ensemble(plan)
    summary = build_summary(result.stats, domain)
    summary_path = _write_summary(summary, out_dir)
    _print_energy_lines(summary)
    failed = _print_verdicts(summary)
    print(f"wrote {records_path}")
    print(f"wrote {summary_path}")
    return 1 if failed else 0


def _write_summary(summary, out_dir):
    from .harness import write_report_files
    return write_report_files(summary, out_dir)


def _cmd_simulate(args):
    return _run_and_summarize(args, (args.energy,))


def _cmd_sweep(args):
    return _run_and_summarize(args, args.energies)


def _cmd_oracle(args):
    domain = Domain(args.side)
    out_dir = _resolve_outdir(args)
    path = args.out if args.out is not None else out_dir / "oracle.csv"
    energies = args.energies
    variances = [var_m_oracle(e, domain) for e in energies]
    means = [mean_length_formula(e, domain) for e in energies]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write("# berrywave.oracle/1\n")
        f.write("energy,var_m_oracle,mean_length_formula\n")
        for e, v, m in zip(energies, variances, means):
            f.write(f"{repr(float(e))},{repr(v)},{repr(m)}\n")
        if len(energies) >= 3:
            slope, _ = slope_fit(energies, variances)
            asym = variance_log_slope(domain)
            f.write(f"# slope_vs_log_energy {repr(slope)}\n")
            f.write(f"# asymptotic_slope {repr(asym)}\n")
    for e, v, m in zip(energies, variances, means):
        print(f"energy {e:g}: var_m_oracle={v:.6e} mean_length={m:.6f}")
    print(f"wrote {path}")
    return 0


def _cmd_report(args):
    out_dir = _resolve_outdir(args)
    summary = report(args.inputs, out_dir, side=args.side,
                     bootstrap_rounds=args.bootstrap)
    _print_energy_lines(summary)
    failed = _print_verdicts(summary)
    print(f"wrote {out_dir / 'summary.json'}")
    return 1 if failed else 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RecordParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
