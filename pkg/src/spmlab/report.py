"""Report rendering: JSONL records, human-readable summaries, CSV dumps and
matplotlib figures written side by side under one run directory.

The JSONL stream carries no timestamps, so reruns with identical seeds are
byte-identical; wall-clock information lives only in the summary text.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .diagnostics import DiagnosticsReport


class OutputSink:
    """Collects the artifacts of one scenario run under a single directory:
    report.jsonl and summary.txt at the top, trajectory/ensemble CSVs under
    dumps/ and rendered figures under figures/."""

    def __init__(self, root) -> None:
        self.root = Path(root)
        self.dumps = self.root / "dumps"
        self.figures = self.root / "figures"
        for d in (self.root, self.dumps, self.figures):
            d.mkdir(parents=True, exist_ok=True)

    def dump_trajectory(self, name: str, traj) -> None:
        traj.to_csv(self.dumps / f"{name}.csv")
        traj.save_npz(self.dumps / f"{name}.npz")
        self._profile_figure(name, traj)

    def dump_ensemble(self, name: str, ensemble) -> None:
        ensemble.to_csv(self.dumps / f"{name}.csv")

    def dump_noise(self, name: str, realization) -> None:
        realization.save_npz(self.dumps / f"{name}.npz")

    def _profile_figure(self, name: str, traj) -> None:
        fig, ax = plt.subplots(figsize=(7, 4))
        count = traj.fields.shape[0]
        picks = sorted(set(int(round(i)) for i in (0, count // 4, count // 2, 3 * count // 4, count - 1)))
        for m in picks:
            ax.plot(traj.grid.nodes, traj.fields[m], label=f"t = {traj.times[m]:.3g}")
        ax.set_xlabel("x")
        ax.set_ylabel("density")
        ax.set_title(name)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(self.figures / f"{name}.png", dpi=120)
        plt.close(fig)

    def _series_figures(self, report: DiagnosticsReport) -> None:
        for name, (times, values) in report.series.items():
            fig, ax = plt.subplots(figsize=(6, 3.5))
            ax.plot(times, values, marker="." if len(times) <= 60 else None)
            ax.set_xlabel("t")
            ax.set_ylabel(name)
            ax.set_title(f"{report.scenario}: {name}")
            fig.tight_layout()
            fig.savefig(self.figures / f"series_{name}.png", dpi=120)
            plt.close(fig)

    def _table_figures(self, report: DiagnosticsReport) -> None:
        for name, rows in report.tables.items():
            if not rows:
                continue
            keys = [k for k, v in rows[0].items() if isinstance(v, (int, float)) and not isinstance(v, bool)]
            if len(keys) < 2:
                continue
            xkey = keys[0]
            xs = [row[xkey] for row in rows]
            fig, ax = plt.subplots(figsize=(6, 4))
            for ykey in keys[1:]:
                ys = [row[ykey] for row in rows]
                ax.plot(xs, ys, marker="o", label=ykey)
            positive = all(x > 0 for x in xs) and max(xs) / min(xs) >= 50
            if positive:
                ax.set_xscale("log")
                if all(all(row[k] > 0 for k in keys[1:]) for row in rows):
                    ax.set_yscale("log")
            ax.set_xlabel(xkey)
            ax.set_title(f"{report.scenario}: {name}")
            ax.legend(fontsize=8)
            fig.tight_layout()
            fig.savefig(self.figures / f"table_{name}.png", dpi=120)
            plt.close(fig)

    def finalize(self, report: DiagnosticsReport) -> None:
        write_jsonl(report, self.root / "report.jsonl")
        write_summary(report, self.root / "summary.txt")
        self._series_figures(report)
        self._table_figures(report)


def write_jsonl(report: DiagnosticsReport, path) -> None:
    with open(path, "w") as fh:
        for record in report.to_jsonl_records():
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_summary(report: DiagnosticsReport, path) -> None:
    lines = [
        f"scenario:    {report.scenario}",
        f"fingerprint: {report.fingerprint}",
        f"generated:   {time.strftime('%Y-%m-%d %H:%M:%S')}",
        f"seeds:       {json.dumps(report.seeds, sort_keys=True)}",
        "",
        "checks:",
    ]
    for c in report.checks:
        lines.append("  " + c.describe())
    if report.warnings:
        lines.append("")
        lines.append("warnings:")
        for w in report.warnings:
            lines.append(f"  {w}")
    for name, rows in report.tables.items():
        lines.append("")
        lines.append(f"table {name}:")
        for row in rows:
            lines.append("  " + json.dumps(row, sort_keys=True))
    lines.append("")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    Path(path).write_text("\n".join(lines) + "\n")
