"""Run orchestration: config in, output directory out."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .contour import Contour, extract_zero_set, write_contour
from .errors import StuckInfeasible
from .functionals import evaluate_G
from .grid import write_field
from .optimizer import IterationRecord, run
from .redistance import LevelSetFunction
from .report import svg_snapshot, write_figures
from .topology import TopologyReport, analyze

log = logging.getLogger(__name__)


class RunDirectory:
    """Sink writing history.csv, snapshots and (optionally) per-iteration topology."""

    def __init__(self, out_dir: Path, snapshot_every: int = 0, verify_topology: bool = False):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.snapshot_every = snapshot_every
        self.history: list[IterationRecord] = []
        self.last: tuple[LevelSetFunction, Contour] | None = None
        self.first_contour: Contour | None = None
        self._hist = open(self.out / "history.csv", "w", newline="")
        self._hist.write(",".join(IterationRecord.CSV_FIELDS) + "\n")
        self._topo = None
        if verify_topology:
            self._topo = open(self.out / "topology.csv", "w", newline="")
            self._topo.write("iter," + TopologyReport.CSV_HEADER + "\n")

    def record(self, rec: IterationRecord, phi: LevelSetFunction, contour: Contour) -> None:
        self.history.append(rec)
        self.last = (phi, contour)
        if self.first_contour is None:
            self.first_contour = contour
        self._hist.write(rec.csv_row() + "\n")
        self._hist.flush()
        if self._topo is not None:
            report = analyze(phi)
            if report.components_pos != rec.components_pos:
                log.warning("iteration %d: topology check found %d components, record has %d",
                            rec.iter, report.components_pos, rec.components_pos)
            self._topo.write(f"{rec.iter},{report.csv_row()}\n")
            self._topo.flush()
        if self.snapshot_every and rec.iter % self.snapshot_every == 0:
            write_contour(contour, self.out / f"contour_{rec.iter:04d}.txt")
            svg = svg_snapshot(contour, phi.spec, f"iteration {rec.iter}")
            (self.out / f"snapshot_{rec.iter:04d}.svg").write_text(svg)

    def close(self) -> None:
        self._hist.close()
        if self._topo is not None:
            self._topo.close()


@dataclass
class RunResult:
    status: str                    # "converged", "max_iters" or "stuck"
    history: list[IterationRecord]
    phi: LevelSetFunction
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "stuck"


def _summary(cfg: RunConfig, result: RunResult, area0: float,
             final_report: TopologyReport) -> str:
    first, last = result.history[0], result.history[-1]
    lines = [
        f"status: {result.status}",
        f"iterations: {last.iter}",
        f"functional: {cfg.functional.name}",
        f"d: {cfg.barrier.d!r}",
        f"l: {cfg.barrier.l!r}",
        f"epsilon: {cfg.barrier.epsilon!r}",
        f"K: {cfg.barrier.K!r}",
        f"h: {cfg.grid.h!r}",
        f"initial_F: {first.F!r}",
        f"final_F: {last.F!r}",
        f"initial_area: {area0!r}",
        f"final_area: {last.area!r}",
        f"initial_components: {first.components_pos}",
        f"final_components: {final_report.components_pos}",
        f"final_holes: {final_report.holes}",
        f"final_min_gap: {final_report.min_gap!r}",
        f"final_min_thickness: {final_report.min_thickness!r}",
    ]
    if result.message:
        lines.append(f"message: {result.message}")
    return "\n".join(lines) + "\n"


def run_config(cfg: RunConfig, figures: bool = True) -> RunResult:
    """Execute one optimization run and write everything under ``cfg.output``."""
    phi0 = cfg.initial_field()
    area0 = evaluate_G(phi0)
    constraint = cfg.constraint_for(area0)
    sink = RunDirectory(cfg.output, cfg.snapshot_every, cfg.verify_topology)
    try:
        try:
            phi, history = run(phi0, cfg.functional, constraint, cfg.barrier, cfg.optimizer, sink)
            converged = history[-1].iter < cfg.optimizer.max_iters
            result = RunResult("converged" if converged else "max_iters", history, phi)
        except StuckInfeasible as exc:
            phi = sink.last[0] if sink.last is not None else phi0
            result = RunResult("stuck", list(sink.history), phi, str(exc))
    finally:
        sink.close()

    out = Path(cfg.output)
    write_field(result.phi.field, out / "final_field.txt")
    if not result.history:
        # the initial shape itself was infeasible
        (out / "summary.txt").write_text(f"status: stuck\niterations: 0\n"
                                         f"initial_area: {area0!r}\nmessage: {result.message}\n")
        return result
    report = analyze(result.phi)
    (out / "summary.txt").write_text(_summary(cfg, result, area0, report))
    if figures:
        write_figures(out, result.history, sink.first_contour, extract_zero_set(result.phi),
                      cfg.grid)
    return result
