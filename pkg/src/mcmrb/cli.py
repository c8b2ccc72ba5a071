"""Command-line front end.

Subcommands::

    mcmrb simulate --config run.ini --out results/
    mcmrb sweep    --config sweep.ini --out results/
    mcmrb analyze  curves.csv --out results/ [--shots 1024]
    mcmrb metrics  --config run.ini --out results/
    mcmrb report   results/

Exit codes: 0 success, 2 configuration error, 3 data-format error,
4 numeric or convergence failure (outputs are still written and flagged).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import channel_metrics as cm
from .analysis import (
    PROTOCOLS,
    QUBITS,
    FitInputError,
    IRBError,
    classify_signature,
    fit_exponential,
    suite_result_from_fits,
)
from .config import ConfigError, RunConfig, load_config
from .noise import NoiseParameterError
from .protocols import run_suite
from .records import (
    DataFormatError,
    fits_to_dict,
    read_curves,
    require_full_suite,
    write_curves,
    write_json,
    write_table,
)
from .simulator import MEASURE_ANCILLA, KrausChannel

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

SWEEP_COLUMNS = (
    "parameter", "value", "eps_irb", "sigma_eps_irb", "epm_rb_ancilla", "epm_rep_ancilla",
    "epc_rb_control", "epc_del_control", "rms_rb_control", "analytic_infidelity", "signatures",
)


class NumericFailure(RuntimeError):
    pass


def analyse_curves(curves: dict, shots: int) -> dict:
    """Fit all six curves, estimate the suite result and classify it.

    Returns a dict with ``fits``, ``result``, ``classification`` and a
    ``status`` of ``"ok"`` or ``"numeric_failure"``; failed pieces are None.
    """
    fits = {key: fit_exponential(curve) for key, curve in curves.items()}
    out = {"fits": fits, "result": None, "classification": None, "status": "ok", "problems": []}
    bad = [f"{p}/{q}" for (p, q), f in fits.items() if not f.converged]
    if bad:
        out["problems"].append(f"fit did not converge: {', '.join(bad)}")
    try:
        result = suite_result_from_fits(fits, exact=shots == 0)
    except IRBError as exc:
        out["problems"].append(str(exc))
    else:
        out["result"] = result
        out["classification"] = classify_signature(result)
    if out["problems"]:
        out["status"] = "numeric_failure"
    return out


def format_report(result: dict, classification: dict | None, title: str = "") -> str:
    lines = [title] if title else []
    lines.append(f"{'protocol':<10}{'qubit':<9}{'eps':>12}{'sigma':>12}{'fit rms':>12}")
    for key in (f"{p}/{q}" for p in PROTOCOLS for q in QUBITS):
        e = result["eps"].get(key)
        if e is None:
            continue
        p, q = key.split("/")
        lines.append(f"{p:<10}{q:<9}{e['value']:>12.4e}{e['sigma']:>12.2e}{result['fit_quality'][key]:>12.2e}")
    irb = result["eps_irb"]
    lines.append(f"eps_IRB = {irb['value']:.4e} +/- {irb['sigma']:.2e}")
    if classification is not None:
        sigs = classification["signatures"] or ["(no signature matched)"]
        lines.append("signatures: " + ", ".join(sigs))
        for name, notes in classification["evidence"].items():
            lines.extend("  " + n for n in notes)
        lines.extend("hint: " + h for h in classification["hints"])
    return "\n".join(lines) + "\n"


def _write_analysis(out_dir: Path, analysis: dict, title: str) -> int:
    write_json(fits_to_dict(analysis["fits"]), out_dir / "fits.json")
    summary = {"status": analysis["status"], "problems": analysis["problems"]}
    if analysis["result"] is not None:
        summary.update(analysis["result"].to_dict())
    write_json(summary, out_dir / "suite_result.json")
    cls = analysis["classification"].to_dict() if analysis["classification"] is not None else None
    if cls is not None:
        write_json(cls, out_dir / "classification.json")
    if analysis["result"] is not None:
        report = format_report(summary, cls, title)
    else:
        report = title + "\n" + "\n".join(analysis["problems"]) + "\n"
    if analysis["problems"]:
        report += "NUMERIC FAILURE: " + "; ".join(analysis["problems"]) + "\n"
    (out_dir / "report.txt").write_text(report)
    print(report, end="")
    return EXIT_OK if analysis["status"] == "ok" else EXIT_NUMERIC


def _config(args) -> RunConfig:
    return load_config(args.config, seed=args.seed, shots=args.shots)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _config(args)
    fmt = args.format or cfg.output_format
    out = _out_dir(args)
    data = run_suite(cfg.suite, cfg.noise_model(), threads=args.threads)
    write_curves(data.curves, out / f"decay_curves.{fmt}", fmt)
    analysis = analyse_curves(data.curves, cfg.suite.shots)
    return _write_analysis(out, analysis, f"scenario {cfg.scenario} (seed {cfg.suite.seed})")


def analytic_infidelity(scenario: str, params: dict) -> float | None:
    """Closed-form average gate infidelity of the scenario's dominant error, if known."""
    if scenario == "non_qnd":
        return params["eta"] / 2
    if scenario == "stark":
        return cm.infidelity_stark(params["phi"])
    if scenario == "cross_measurement":
        return cm.infidelity_cross_measurement(params["p_m"])
    if scenario == "collision":
        J = params["J"]
        delta = params["delta"] if "delta" in params else params["delta_over_J"] * J
        return cm.collision_infidelity(delta, J, params["t_m"])
    return None


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if not cfg.sweep_parameter:
        raise ConfigError("sweep needs a [sweep] section with 'parameter' and 'values'", cfg.path)
    fmt = args.format or cfg.output_format
    out = _out_dir(args)
    points = out / "points"
    points.mkdir(exist_ok=True)
    rows, status = [], EXIT_OK
    for i, value in enumerate(cfg.sweep_values):
        params = dict(cfg.noise_params, t_m=cfg.suite.t_m, **{cfg.sweep_parameter: value})
        data = run_suite(cfg.suite, cfg.noise_model(**{cfg.sweep_parameter: value}), threads=args.threads)
        analysis = analyse_curves(data.curves, cfg.suite.shots)
        write_curves(data.curves, points / f"{i:03d}_decay_curves.{fmt}", fmt)
        summary = {"parameter": cfg.sweep_parameter, "value": value, "status": analysis["status"],
                   "problems": analysis["problems"], "fits": fits_to_dict(analysis["fits"])}
        row = dict.fromkeys(SWEEP_COLUMNS, "")
        row.update(parameter=cfg.sweep_parameter, value=value)
        analytic = analytic_infidelity(cfg.scenario, params)
        row["analytic_infidelity"] = analytic if analytic is not None else ""
        fits = analysis["fits"]
        row["epm_rb_ancilla"] = fits[("mcm_rb", "ancilla")].epc
        row["epm_rep_ancilla"] = fits[("mcm_rep", "ancilla")].epc
        row["epc_rb_control"] = fits[("mcm_rb", "control")].epc
        row["epc_del_control"] = fits[("delay_rb", "control")].epc
        row["rms_rb_control"] = fits[("mcm_rb", "control")].residual_rms
        if analysis["result"] is not None:
            summary.update(analysis["result"].to_dict())
            summary["classification"] = analysis["classification"].to_dict()
            row["eps_irb"] = analysis["result"].eps_irb.value
            row["sigma_eps_irb"] = analysis["result"].eps_irb.sigma
            row["signatures"] = ";".join(summary["classification"]["signatures"])
        else:
            status = EXIT_NUMERIC
        write_json(summary, points / f"{i:03d}_suite_result.json")
        rows.append(row)
        print(f"{cfg.sweep_parameter}={value:.6g}: eps_irb={row['eps_irb']!s:.10} analytic={row['analytic_infidelity']!s:.10}")
    write_table(rows, SWEEP_COLUMNS, out / f"sweep_summary.{fmt}", fmt)
    return status


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    curves = read_curves(args.data, shots=args.shots or 0)
    require_full_suite(curves, args.data)
    analysis = analyse_curves(curves, args.shots or 0)
    return _write_analysis(out, analysis, f"analysis of {args.data}")


def measurement_step_channel(cfg: RunConfig) -> tuple[KrausChannel, KrausChannel]:
    """(full measurement step, error part alone) as two-qubit channels."""
    noise = cfg.noise_model()
    error = noise.pre_measure.then(noise.post_measure)
    full = noise.pre_measure.then(MEASURE_ANCILLA).then(noise.post_measure)
    return full, error


def cmd_metrics(args) -> int:
    cfg = _config(args)
    fmt = args.format or cfg.output_format
    out = _out_dir(args)
    full, error = measurement_step_channel(cfg)
    choi = cm.choi_of_channel(full)
    basis = [f"{i:02b}" for i in range(4)]
    choi_labels = [f"{a}>{b}" for a in basis for b in basis]
    cm.write_matrix_csv(choi.matrix.real, choi_labels, out / "choi_real.csv")
    cm.write_matrix_csv(choi.matrix.imag, choi_labels, out / "choi_imag.csv")

    infid = {
        mode: 1 - cm.avg_gate_fidelity(cm.effective_control_channel(cm.choi_of_channel(error), mode))
        for mode in ("ground", "mixed")
    }
    eps_irb = cfg.metrics.get("eps_irb", infid["ground"])
    ptm = cm.ptm_of_channel(full)
    ideal = cm.ptm_of_channel(MEASURE_ANCILLA)
    ptm.to_csv(out / "ptm.csv")
    cm.threshold_ptm(ptm, eps_irb, ideal).to_csv(out / "ptm_thresholded.csv")
    cm.ptm_of_channel(error).to_csv(out / "error_ptm.csv")
    summary = {
        "scenario": cfg.scenario,
        "effective_control_infidelity": infid["ground"],
        "effective_control_infidelity_mixed_ancilla": infid["mixed"],
        "eps_irb_for_threshold": eps_irb,
        "ptm_threshold": float(np.sqrt(6 * eps_irb)),
        "zphase_theta": cm.zphase_angle_from_infidelity(eps_irb) if eps_irb <= 2 / 3 else None,
    }
    write_json(summary, out / "metrics.json")
    if "delta_over_J" in cfg.metrics:
        if "J" not in cfg.noise_params:
            raise ConfigError("[metrics] delta_over_J needs J in [noise]", cfg.path)
        J = cfg.noise_params["J"]
        rows = [{"delta_over_J": r, "infidelity": cm.collision_infidelity(r * J, J, cfg.suite.t_m)}
                for r in cfg.metrics["delta_over_J"]]
        write_table(rows, ("delta_over_J", "infidelity"), out / f"collision_infidelity.{fmt}", fmt)
    for k, v in summary.items():
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_report(args) -> int:
    import json

    d = Path(args.results)
    try:
        result = json.loads((d / "suite_result.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{d}: cannot read suite_result.json ({exc})") from exc
    cls_path = d / "classification.json"
    cls = json.loads(cls_path.read_text()) if cls_path.exists() else None
    if "eps" not in result:
        print("\n".join(result.get("problems", [])))
        return EXIT_NUMERIC
    print(format_report(result, cls, f"results in {d}"), end="")
    return EXIT_OK if result.get("status", "ok") == "ok" else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcmrb", description="Mid-circuit measurement RB suite.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", default="mcmrb_out", help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--shots", type=int, help="shots per circuit (0 = exact probabilities)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--format", choices=("csv", "json"), help="tabular output format")

    common(sub.add_parser("simulate", help="simulate the suite for one scenario"))
    common(sub.add_parser("sweep", help="simulate a parameter grid"))
    p = sub.add_parser("analyze", help="fit and classify measured decay curves")
    p.add_argument("data", help="decay-curve CSV or JSON file")
    common(p, config=False)
    common(sub.add_parser("metrics", help="channel-level metrics of a scenario"))
    p = sub.add_parser("report", help="print a report from a results directory")
    p.add_argument("results")
    return parser


COMMANDS = {
    "simulate": cmd_simulate, "sweep": cmd_sweep, "analyze": cmd_analyze,
    "metrics": cmd_metrics, "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, NoiseParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, FitInputError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (IRBError, NumericFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
