"""Report files: ``report.csv``, ``summary.txt`` and SVG plots.

``report.csv`` columns (version 1)::

    kind, check, n, value, se, target, target_se, tolerance, rule, passed

``rule`` says how ``passed`` follows from the other columns:

=========  ================================================================
rel        ``|value - target| <= tolerance * |target|``
nsigma     ``|value - target| <= tolerance * sqrt(se^2 + target_se^2)``
gt         ``value > target``
ge         ``value >= target``
le         ``value <= target + tolerance * sqrt(se^2 + target_se^2)``
info       no check; ``passed`` is empty
=========  ================================================================

Floats are written with ``repr`` so that rereading gives the same bits;
missing values are empty fields.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

COLUMNS = ["kind", "check", "n", "value", "se", "target", "target_se", "tolerance", "rule", "passed"]
RULES = ("rel", "nsigma", "gt", "ge", "le", "info")


@dataclass
class CheckRow:
    kind: str
    check: str
    value: float
    n: float | None = None
    se: float | None = None
    target: float | None = None
    target_se: float | None = None
    tolerance: float | None = None
    rule: str = "info"

    @property
    def passed(self) -> bool | None:
        return evaluate_rule(self.rule, self.value, self.se, self.target, self.target_se, self.tolerance)


def _z(v):
    return 0.0 if v is None or (isinstance(v, float) and math.isnan(v)) else v


def evaluate_rule(rule, value, se, target, target_se, tolerance) -> bool | None:
    if rule == "info":
        return None
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return False
    if rule == "rel":
        return abs(value - target) <= tolerance * abs(target)
    if rule == "nsigma":
        return abs(value - target) <= tolerance * math.hypot(_z(se), _z(target_se))
    if rule == "gt":
        return value > target
    if rule == "ge":
        return value >= target
    if rule == "le":
        return value <= target + _z(tolerance) * math.hypot(_z(se), _z(target_se))
    raise ValueError(f"unknown rule {rule!r}")


@dataclass
class ExperimentReport:
    kind: str
    rows: list[CheckRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    replicas: list[tuple] = field(default_factory=list)  # (replica, n, t, statistic)
    plots: dict[str, dict] = field(default_factory=dict)

    def add(self, check: str, value, **kw) -> CheckRow:
        row = CheckRow(self.kind, check, float(value), **kw)
        self.rows.append(row)
        return row

    @property
    def checks(self) -> list[CheckRow]:
        return [r for r in self.rows if r.rule != "info"]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.checks)

    @property
    def failures(self) -> list[CheckRow]:
        return [r for r in self.checks if not r.passed]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv_text(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in report.rows:
        p = r.passed
        w.writerow([r.kind, r.check, _fmt(r.n), _fmt(r.value), _fmt(r.se), _fmt(r.target), _fmt(r.target_se),
                    _fmt(r.tolerance), r.rule, "" if p is None else _fmt(bool(p))])
    return buf.getvalue()


def read_report_csv(path) -> list[dict]:
    """Rows of a ``report.csv`` with floats restored (empty fields become None)."""
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rec: dict = {"kind": row["kind"], "check": row["check"], "rule": row["rule"]}
            for k in ("n", "value", "se", "target", "target_se", "tolerance"):
                rec[k] = float(row[k]) if row[k] != "" else None
            rec["passed"] = None if row["passed"] == "" else row["passed"] == "1"
            out.append(rec)
    return out


def recheck(rows: Sequence[dict]) -> list[bool]:
    """Recompute ``passed`` from the stored columns; True where it agrees."""
    return [evaluate_rule(r["rule"], r["value"], r["se"], r["target"], r["target_se"], r["tolerance"]) == r["passed"]
            for r in rows]


def summary_text(report: ExperimentReport) -> str:
    lines = [f"experiment: {report.kind}"]
    for note in report.notes:
        lines.append(f"note: {note}")
    lines.append("")
    for r in report.rows:
        p = r.passed
        status = "info" if p is None else ("PASS" if p else "FAIL")
        n = "" if r.n is None else f" n={r.n:g}"
        se = "" if r.se is None else f" +- {r.se:.3g}"
        tgt = "" if r.target is None else f" target={r.target:.6g}"
        tol = "" if r.tolerance is None else f" tol={r.tolerance:g}"
        lines.append(f"[{status}] {r.check}{n}: {r.value:.6g}{se}{tgt}{tol} ({r.rule})")
    checks = report.checks
    npass = sum(bool(r.passed) for r in checks)
    lines.append("")
    lines.append(f"{npass}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


def write_replicas(path, rows: Sequence[tuple]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replica", "n", "t", "statistic"])
        for rep, n, t, v in rows:
            w.writerow([int(rep), _fmt(float(n)), _fmt(float(t)), _fmt(float(v))])
    return path


def write_svg(path, plot: dict) -> Path:
    """Log-log line plot with error bars and an optional horizontal target."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "selfsim"
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    x, y = plot["x"], plot["y"]
    err = plot.get("err")
    ax.errorbar(x, y, yerr=err, marker="o", lw=1.2, capsize=3, label=plot.get("label", "empirical"))
    if plot.get("target") is not None:
        ax.axhline(plot["target"], color="k", ls="--", lw=1.0, label="target")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel(plot.get("xlabel", "n"))
    ax.set_ylabel(plot.get("ylabel", ""))
    ax.set_title(plot.get("title", ""))
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


INCOMPLETE = "INCOMPLETE"


def _atomic_text(path: Path, text: str) -> Path:
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def emit_outputs(report: ExperimentReport, directory, plots: bool = True) -> list[Path]:
    """Write ``report.csv``, ``summary.txt``, ``replicas.csv`` (if any) and the plots.

    An ``INCOMPLETE`` marker file is present while writing, and each file is
    written under a ``.partial`` name and then renamed, so an interrupted run
    leaves no half-written file under a final name.
    """
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        marker = d / INCOMPLETE
        marker.write_text(f"output of {report.kind} is being written\n")
        written = [
            _atomic_text(d / "report.csv", report_csv_text(report)),
            _atomic_text(d / "summary.txt", summary_text(report)),
        ]
        if report.replicas:
            tmp = write_replicas(d / "replicas.csv.partial", report.replicas)
            os.replace(tmp, d / "replicas.csv")
            written.append(d / "replicas.csv")
        if plots:
            for name, spec in sorted(report.plots.items()):
                tmp = write_svg(d / f"{name}.svg.partial", spec)
                os.replace(tmp, d / f"{name}.svg")
                written.append(d / f"{name}.svg")
        marker.unlink()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write outputs to {d}: {exc.strerror}") from exc
    return written
