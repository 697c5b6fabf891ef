"""Report emission: CSV series, JSON summaries, and plain-text tables.

The text table mirrors the four step-size regimes of the minimum-output
bound with theta_k = 1 - 1/k: for q in {0.3, 0.5, 0.7, 1.0} the bound is
evaluated deterministically on a geometric horizon grid with the run's
certified constants, and the fitted decay is printed against the
predicted one (power law, log-corrected root, or logarithmic decay).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..bounds import fit_rate, min_output_bound, min_output_constants
from ..schedules import PowerEta, PowerTheta
from .experiment import RunResult, load_run

__all__ = ["report", "rate_table", "series_rates"]

REPORT_FORMATS = ("csv", "json", "table")


def _as_run(run) -> RunResult:
    return run if isinstance(run, RunResult) else load_run(run)


def rate_table(constants_args: dict, k_lo: int = 1000, k_hi: int = 1_000_000,
               points: int = 13) -> list:
    """Fitted-vs-predicted decay of the minimum-output bound, four regimes.

    q < 1/2: O(1/K^q); q = 1/2: O(ln K / sqrt K); 1/2 < q < 1: O(1/K^(1-q));
    q = 1: O(1/ln K).
    """
    grid = np.unique(np.round(np.geomspace(k_lo, k_hi, points)).astype(int))
    consts = min_output_constants(**constants_args)
    theta = PowerTheta(exponent=1.0)
    rows = []
    for q in (0.3, 0.5, 0.7, 1.0):
        vals = min_output_bound(consts, PowerEta(exponent=q), theta, grid)
        pts = list(zip(grid, vals))
        if q == 0.5:
            fit = fit_rate(pts, log_correction=True)
            rows.append({"q": q, "predicted": "ln(K)/sqrt(K)",
                         "fitted_exponent": fit.exponent,
                         "flatness_last_decade": fit.flatness,
                         "ok": bool(fit.flatness <= 1.2)})
        elif q == 1.0:
            at = {int(k): float(v) for k, v in pts}
            ratio = at[int(grid[-1])] / at[int(grid[-1]) // 10]
            predicted = math.log(grid[-1] / 10) / math.log(grid[-1])
            rows.append({"q": q, "predicted": "1/ln(K)",
                         "ratio_last_decade": ratio,
                         "predicted_ratio": predicted,
                         "ok": bool(abs(ratio / predicted - 1.0) <= 0.10)})
        else:
            fit = fit_rate(pts)
            predicted = -q if q < 0.5 else -(1.0 - q)
            rows.append({"q": q, "predicted": f"K^{predicted}",
                         "predicted_exponent": predicted,
                         "fitted_exponent": fit.exponent,
                         "ok": bool(abs(fit.exponent - predicted) <= 0.05)})
    return rows


def series_rates(run: RunResult) -> dict:
    """Fitted log-log exponents of each statistic series and its bound."""
    out = {}
    for name, s in run.series.items():
        entry = {}
        pts = [(k, v) for k, v in zip(s.ks, s.mean) if v > 0]
        if len(pts) >= 3:
            entry["empirical_exponent"] = fit_rate(pts).exponent
        if s.bound is not None:
            bpts = [(k, v) for k, v in zip(s.ks, s.bound) if v > 0]
            if len(bpts) >= 3:
                entry["bound_exponent"] = fit_rate(bpts).exponent
        out[name] = entry
    return out


def _constants_args_from_run(run: RunResult) -> dict:
    c = run.constants
    hp_raw = run.config.hyperparams_raw
    return dict(
        m_bound=c["M"], epsilon=float(hp_raw.get("epsilon", 1e-8)),
        beta=float(hp_raw.get("beta_cap", 0.9)), dim=c["dim"],
        smoothness=c["L_hat"], c0=1.0, c0_tilde=1.0, f1_gap=1.0,
    )


def report(run, fmt: str, dest=None) -> list:
    """Emit report files for a run; returns the written paths."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; pick from {REPORT_FORMATS}")
    run = _as_run(run)
    dest = Path(dest) if dest else run.output_dir / "reports"
    dest.mkdir(parents=True, exist_ok=True)
    written = []

    if fmt == "csv":
        for name, s in run.series.items():
            path = dest / f"{name}.csv"
            path.write_text(s.to_csv(), encoding="utf-8")
            written.append(path)

    elif fmt == "json":
        payload = {
            "config_hash": run.config.config_hash(),
            "problem_constants": run.constants,
            "bound_constants": run.bound_constants,
            "sc_adam": [v if isinstance(v, dict) else v.to_dict() for v in run.sc_adam],
            "sc_zou": [v if isinstance(v, dict) else v.to_dict() for v in run.sc_zou],
            "statistics": {n: s.to_dict() for n, s in run.series.items()},
            "fitted_rates": series_rates(run),
            "box_violations": run.box_violations,
        }
        path = dest / "summary_report.json"
        path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n",
                        encoding="utf-8")
        written.append(path)

    else:  # table
        lines = []
        lines.append(f"run {run.config.config_hash()[:12]}  problem={run.constants['id']}"
                     f"  d={run.constants['dim']}  M={run.constants['M']:.6g}"
                     f"  L={run.constants['L_hat']:.6g}")
        if run.box_violations:
            lines.append(f"WARNING: box violations in seeds "
                         f"{[b['seed'] for b in run.box_violations]}")
        for name, s in run.series.items():
            lines.append("")
            lines.append(f"[{name}]")
            header = f"{'K':>10} {'mean':>14} {'ci':>12}"
            if s.bound is not None:
                header += f" {'bound':>14} {'verdict':>8}"
            lines.append(header)
            for i, k in enumerate(s.ks):
                row = f"{k:>10} {s.mean[i]:>14.6g} {s.ci_halfwidth[i]:>12.4g}"
                if s.bound is not None:
                    row += (f" {s.bound[i]:>14.6g}"
                            f" {'pass' if s.verdict[i] else 'FAIL':>8}")
                lines.append(row)
        lines.append("")
        lines.append("[bound rate table, theta_k = 1 - 1/k, run constants]")
        lines.append(f"{'q':>5} {'predicted':>16} {'fitted/observed':>18} {'ok':>4}")
        for row in rate_table(_constants_args_from_run(run)):
            fitted = row.get("fitted_exponent", row.get("ratio_last_decade"))
            lines.append(f"{row['q']:>5} {row['predicted']:>16} {fitted:>18.4g}"
                         f" {'yes' if row['ok'] else 'NO':>4}")
        path = dest / "report.txt"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    return written
