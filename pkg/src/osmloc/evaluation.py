"""Success-radius evaluation and report emission.

A query counts as localized at rank N when any of its top-N candidates
lies within the success radius of ground truth. Reports go to disk as
CSV plus a trajectory SVG (hand-written, so its vertex list is stable and
trivially parseable) and matplotlib renderings alongside.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .geo import PlanarPoint

SUCCESS_COLOR = "#2e7d32"
FAILURE_COLOR = "#000000"


@dataclass
class QueryOutcome:
    frame: int
    rank_of_first_success: Optional[int]
    rank1_error_m: float
    position: PlanarPoint  # ground truth, kept for the trajectory plot


@dataclass
class EvalReport:
    per_query: list
    summary: dict          # rank cutoff -> percent of queries localized
    radius: float
    timing: Optional[dict] = field(default=None)


def evaluate(results: Sequence, ground_truth: Sequence, radius: float = 5.0,
             ns: Sequence[int] = (1, 5, 10), frames: Optional[Sequence[int]] = None) -> EvalReport:
    """Score localization results against ground-truth positions.

    `results` and `ground_truth` are aligned by index (or by the explicit
    `frames` list). Success at N means some top-N candidate is within
    `radius` meters.
    """
    if len(results) != len(ground_truth):
        raise ValueError(
            f"result/ground-truth length mismatch: {len(results)} vs {len(ground_truth)}"
        )
    if frames is None:
        frames = range(len(results))
    elif len(frames) != len(results):
        raise ValueError(f"frame list length {len(frames)} != result count {len(results)}")

    cutoffs = sorted(set(int(n) for n in ns))
    per_query = []
    for frame, result, gt in zip(frames, results, ground_truth):
        gx, gy = float(gt[0]), float(gt[1])
        first_success = None
        rank1_error = math.inf
        for rank, match in enumerate(result.ranked, start=1):
            err = math.hypot(match.position.x - gx, match.position.y - gy)
            if rank == 1:
                rank1_error = err
            if first_success is None and err <= radius:
                first_success = rank
        per_query.append(QueryOutcome(
            frame=int(frame), rank_of_first_success=first_success,
            rank1_error_m=rank1_error, position=PlanarPoint(gx, gy),
        ))

    total = len(per_query)
    summary = {}
    for n in cutoffs:
        if total == 0:
            summary[n] = 0.0
        else:
            hits = sum(
                1 for q in per_query
                if q.rank_of_first_success is not None and q.rank_of_first_success <= n
            )
            summary[n] = 100.0 * hits / total
    return EvalReport(per_query=per_query, summary=summary, radius=radius)


def _svg_coords(outcomes) -> list:
    xs = [q.position.x for q in outcomes]
    ys = [q.position.y for q in outcomes]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    width = 800.0
    margin = 20.0
    scale = (width - 2 * margin) / max(x1 - x0, y1 - y0, 1e-9)
    return [
        (margin + (q.position.x - x0) * scale, margin + (y1 - q.position.y) * scale)
        for q in outcomes
    ]


def _write_trajectory_svg(path: Path, report: EvalReport) -> None:
    outcomes = report.per_query
    lines = ['<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800">']
    if outcomes:
        pts = _svg_coords(outcomes)
        coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
        lines.append(
            f'  <polyline points="{coords}" fill="none" stroke="#888888" stroke-width="1"/>'
        )
        for q, (px, py) in zip(outcomes, pts):
            ok = q.rank_of_first_success == 1
            color = SUCCESS_COLOR if ok else FAILURE_COLOR
            lines.append(f'  <circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>')
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n")


def _render_figures(out_dir: Path, report: EvalReport) -> list:
    from matplotlib.figure import Figure

    written = []
    fig = Figure(figsize=(7, 7))
    ax = fig.add_subplot(111)
    outcomes = report.per_query
    if outcomes:
        xs = [q.position.x for q in outcomes]
        ys = [q.position.y for q in outcomes]
        ax.plot(xs, ys, color="#888888", linewidth=0.8, zorder=1)
        ok = [q.rank_of_first_success == 1 for q in outcomes]
        ax.scatter([x for x, o in zip(xs, ok) if o], [y for y, o in zip(ys, ok) if o],
                   s=12, color=SUCCESS_COLOR, label=f"within {report.radius:g} m", zorder=2)
        ax.scatter([x for x, o in zip(xs, ok) if not o], [y for y, o in zip(ys, ok) if not o],
                   s=12, color=FAILURE_COLOR, label="failed", zorder=2)
        ax.legend(loc="best")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("Query trajectory, top-1 success")
    traj_png = out_dir / "trajectory.png"
    fig.savefig(traj_png, dpi=150)
    written.append(traj_png)

    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot(111)
    ns = sorted(report.summary)
    ax.bar([str(n) for n in ns], [report.summary[n] for n in ns], color="#4878a8")
    for i, n in enumerate(ns):
        ax.text(i, report.summary[n] + 1.0, f"{report.summary[n]:.1f}", ha="center", fontsize=9)
    ax.set_ylim(0, 105)
    ax.set_xlabel("candidates considered")
    ax.set_ylabel("localized [%]")
    ax.set_title(f"Success within {report.radius:g} m")
    acc_png = out_dir / "accuracy.png"
    fig.savefig(acc_png, dpi=150)
    written.append(acc_png)
    return written


def emit_report(report: EvalReport, out_dir) -> list:
    """Write summary.csv, per_query.csv, trajectory.svg and figure PNGs.

    With no queries the CSVs contain headers only. Returns the list of
    paths written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="\n") as fh:
        fh.write("n,accuracy_percent\n")
        if report.per_query:
            for n in sorted(report.summary):
                fh.write(f"{n},{report.summary[n]:.2f}\n")
    written.append(summary_path)

    per_query_path = out / "per_query.csv"
    with open(per_query_path, "w", newline="\n") as fh:
        fh.write("frame,rank_success,rank1_error_m\n")
        for q in report.per_query:
            rank = "" if q.rank_of_first_success is None else str(q.rank_of_first_success)
            fh.write(f"{q.frame},{rank},{q.rank1_error_m:.6f}\n")
    written.append(per_query_path)

    svg_path = out / "trajectory.svg"
    _write_trajectory_svg(svg_path, report)
    written.append(svg_path)

    written.extend(_render_figures(out, report))
    return written
