"""Measurement procedures over experiment logs.

Stiffness identification works the way the original campaign did: pool the
(position, monitored force) pairs of every contact episode, reject forces
outside the 0.8 N to 4.5 N band (points before the fall and after the stop),
sort by increasing force, smooth with an unweighted 10-sample moving average
(full windows only), and fit a line.  The slope of force over position is the
rendered stiffness.  Both windows of the moving average (position and force)
are averaged together so that noise-free affine data returns the exact slope.

Stability is judged on the window 0.5 s to 1.5 s after contact onset: a run
is unstable when the speed keeps flipping sign (>= 20 changes) AND the
position swings by more than 10 encoder steps peak to peak -- "oscillating
continuously instead of coming to rest".  Micro limit cycles at quantization
scale therefore count as stable.

The sweep driver grids loop frequency and wall gains, classifies each cell
from a drop run, and reports per-frequency maxima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .experiments import DropConfig, run_drop_experiment
from .plant import PlantParams
from .runlog import RunLog

__all__ = [
    "AnalysisError",
    "FORCE_WINDOW",
    "MA_WINDOW",
    "HARDWARE_REFERENCE_MAXIMA",
    "estimate_stiffness",
    "classify_stability",
    "settling_time",
    "SweepConfig",
    "SweepCell",
    "FrequencySummary",
    "SweepReport",
    "run_sweep",
    "write_cells_csv",
    "write_summary_csv",
]

FORCE_WINDOW = (0.8, 4.5)
MA_WINDOW = 10

# Maximum stiffness identified on the original cable-driven hardware, per
# loop frequency: (frequency Hz, k N/m, b Ns/m, identified stiffness N/m).
# Report context only -- a desk-scale plant with placeholder friction is not
# expected to reproduce these absolute numbers, only the frequency trend.
HARDWARE_REFERENCE_MAXIMA = (
    (90.0, 1500.0, 0.0, 1374.0),
    (100.0, 2000.0, 0.0, 1506.0),
    (200.0, 2000.0, 15.0, 7203.0),
    (500.0, 6000.0, 20.0, 11977.0),
    (1000.0, 10000.0, 40.0, 18936.0),
    (2000.0, 20000.0, 60.0, 50004.0),
)


class AnalysisError(ValueError):
    """A log cannot support the requested measurement."""


def _encoder_step(log: RunLog, override: float | None) -> float:
    if override is not None:
        return override
    try:
        return float(log.meta["quantizer"]["encoder_step"])
    except (KeyError, TypeError):
        raise AnalysisError(
            "log metadata has no quantizer.encoder_step; pass encoder_step explicitly"
        ) from None


def estimate_stiffness(
    logs,
    direction: str = "force_on_position",
    force_window: tuple[float, float] = FORCE_WINDOW,
    ma_window: int = MA_WINDOW,
    min_pairs: int = 20,
) -> float:
    """Identified contact stiffness in N/m from one or more logs.

    ``direction`` selects the regression: ``force_on_position`` (default,
    matching force-over-position plots) or ``position_on_force`` (inverse
    fit, reported as its reciprocal).
    """
    if isinstance(logs, RunLog):
        logs = [logs]
    qs = []
    fs = []
    for log in logs:
        mask = np.asarray(log.c, dtype=bool)
        qs.append(np.asarray(log.q, dtype=float)[mask])
        fs.append(np.asarray(log.F_mon, dtype=float)[mask])
    if not qs:
        raise AnalysisError("no logs given")
    q = np.concatenate(qs)
    f = np.concatenate(fs)
    if q.size == 0:
        raise AnalysisError("no contact episode in the logs")

    lo, hi = force_window
    keep = (f >= lo) & (f <= hi)
    q = q[keep]
    f = f[keep]
    if q.size < min_pairs:
        raise AnalysisError(
            f"only {q.size} (q, F_mon) pairs inside the {lo}-{hi} N window; "
            f"need at least {min_pairs}"
        )

    # lexicographic sort so ties in force have a canonical order: the
    # estimate is then invariant under shuffling of the input pairs
    order = np.lexsort((q, f))
    q = q[order]
    f = f[order]

    kernel = np.full(ma_window, 1.0 / ma_window)
    q_avg = np.convolve(q, kernel, mode="valid")
    f_avg = np.convolve(f, kernel, mode="valid")

    q_var = float(np.sum((q_avg - q_avg.mean()) ** 2))
    f_var = float(np.sum((f_avg - f_avg.mean()) ** 2))
    cov = float(np.sum((q_avg - q_avg.mean()) * (f_avg - f_avg.mean())))
    # degeneracy is judged on the value spread, not the raw variance: the
    # moving average leaves rounding residue on constant inputs
    q_flat = float(np.ptp(q_avg)) <= 1e-12 * max(1.0, abs(float(q_avg.mean())))
    f_flat = float(np.ptp(f_avg)) <= 1e-12 * max(1.0, abs(float(f_avg.mean())))
    if direction == "force_on_position":
        if q_flat:
            raise AnalysisError("zero position variance: force-position data is a vertical line")
        return cov / q_var
    if direction == "position_on_force":
        if f_flat:
            raise AnalysisError("zero force variance: cannot invert the position-on-force fit")
        slope_qf = cov / f_var
        if slope_qf == 0.0:
            raise AnalysisError("zero position-on-force slope: stiffness unbounded")
        return 1.0 / slope_qf
    raise ValueError(f"unknown regression direction {direction!r}")


def _contact_onset(log: RunLog) -> int:
    idx = np.flatnonzero(np.asarray(log.c, dtype=bool))
    if idx.size == 0:
        raise AnalysisError("log contains no contact onset")
    return int(idx[0])


def classify_stability(
    log: RunLog,
    window: tuple[float, float] = (0.5, 1.5),
    min_sign_changes: int = 20,
    min_p2p_steps: int = 10,
    encoder_step: float | None = None,
) -> str:
    """``"stable"`` or ``"unstable"`` from the post-onset window.

    Unstable means both gates fire: the speed sign keeps alternating and the
    position swing exceeds the amplitude gate (in encoder steps).
    """
    step = _encoder_step(log, encoder_step)
    onset_t = float(log.t[_contact_onset(log)])
    t = np.asarray(log.t, dtype=float)
    t0, t1 = onset_t + window[0], onset_t + window[1]
    if t[-1] < t1 - 1e-12:
        raise AnalysisError(
            f"log ends at {t[-1]:.3f} s but the stability window needs {t1:.3f} s; run too short"
        )
    sel = (t >= t0) & (t <= t1)
    qdot = np.asarray(log.qdot, dtype=float)[sel]
    q = np.asarray(log.q, dtype=float)[sel]
    signs = np.sign(qdot)
    signs = signs[signs != 0.0]
    changes = int(np.count_nonzero(signs[1:] != signs[:-1])) if signs.size > 1 else 0
    p2p = float(q.max() - q.min()) if q.size else 0.0
    if changes >= min_sign_changes and p2p > min_p2p_steps * step:
        return "unstable"
    return "stable"


def settling_time(
    log: RunLog,
    band_steps: float = 5.0,
    hold: float = 0.05,
    final_window: float = 0.1,
    encoder_step: float | None = None,
) -> float:
    """Seconds from first contact until the position stays within
    ``band_steps`` encoder steps of its final value for ``hold`` seconds.

    The final value is the mean position over the last ``final_window``
    seconds of contact.  Raises when the log never settles.
    """
    step = _encoder_step(log, encoder_step)
    onset = _contact_onset(log)
    t = np.asarray(log.t, dtype=float)
    q = np.asarray(log.q, dtype=float)
    c = np.asarray(log.c, dtype=bool)
    t_end = float(t[np.flatnonzero(c)[-1]])
    final_sel = c & (t >= t_end - final_window) & (t <= t_end)
    q_final = float(q[final_sel].mean())

    band = band_steps * step
    ok = np.abs(q - q_final) < band
    ok[:onset] = False
    T = float(np.median(np.diff(t))) if len(t) > 1 else hold
    n_hold = max(1, int(math.ceil(hold / T)) + 1)
    # first index where ok holds for n_hold consecutive ticks
    run = np.convolve(ok.astype(int), np.ones(n_hold, dtype=int), mode="valid")
    hits = np.flatnonzero(run == n_hold)
    if hits.size == 0:
        raise AnalysisError("position never stays inside the settling band; run never settles")
    return float(t[hits[0]] - t[onset])


@dataclass
class SweepConfig:
    """Grid of loop frequencies and wall gains evaluated by drop runs."""

    frequencies: tuple
    k_grid: tuple
    b_grid: tuple
    plant: PlantParams = field(default_factory=PlantParams)
    drop: DropConfig = field(default_factory=DropConfig)

    def validate(self) -> None:
        for name, grid in (("frequencies", self.frequencies), ("k_grid", self.k_grid), ("b_grid", self.b_grid)):
            if len(grid) == 0:
                raise ValueError(f"{name} must be non-empty")
            if any(b < a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be ascending")
        self.plant.validate()


@dataclass
class SweepCell:
    f_loop: float
    k: float
    b: float
    verdict: str  # stable | unstable | error
    stiffness: float | None = None
    note: str = ""


@dataclass
class FrequencySummary:
    f_loop: float
    max_stable_k_b0: float | None
    best_stiffness: float | None
    best_k: float | None
    best_b: float | None


@dataclass
class SweepReport:
    cells: list
    summaries: list
    meta: dict

    def summary_for(self, f_loop: float) -> FrequencySummary:
        for s in self.summaries:
            if s.f_loop == f_loop:
                return s
        raise KeyError(f_loop)


def run_sweep(cfg: SweepConfig) -> SweepReport:
    """Evaluate every (frequency, k, b) cell; cell failures are marked, never fatal.

    Cells are seeded independently from the template seed plus the cell index,
    so results do not depend on iteration order.
    """
    cfg.validate()
    cells: list[SweepCell] = []
    index = 0
    for f in cfg.frequencies:
        for k in cfg.k_grid:
            for b in cfg.b_grid:
                drop_cfg = replace(
                    cfg.drop,
                    f_loop=float(f),
                    wall=replace(cfg.drop.wall, k=float(k), b=float(b)),
                    plant=cfg.plant,
                    seed=cfg.drop.seed + index,
                )
                cells.append(_run_cell(drop_cfg, float(f), float(k), float(b)))
                index += 1

    summaries = []
    for f in cfg.frequencies:
        fc = [c for c in cells if c.f_loop == float(f)]
        stable = [c for c in fc if c.verdict == "stable"]
        b0 = [c.k for c in stable if c.b == 0.0]
        with_stiff = [c for c in stable if c.stiffness is not None]
        best = max(with_stiff, key=lambda c: c.stiffness) if with_stiff else None
        summaries.append(
            FrequencySummary(
                f_loop=float(f),
                max_stable_k_b0=max(b0) if b0 else None,
                best_stiffness=best.stiffness if best else None,
                best_k=best.k if best else None,
                best_b=best.b if best else None,
            )
        )
    meta = {
        "experiment": "sweep",
        "seed": cfg.drop.seed,
        "frequencies": list(cfg.frequencies),
        "k_grid": list(cfg.k_grid),
        "b_grid": list(cfg.b_grid),
        "drop_template": cfg.drop.meta(),
    }
    return SweepReport(cells=cells, summaries=summaries, meta=meta)


def _run_cell(drop_cfg: DropConfig, f: float, k: float, b: float) -> SweepCell:
    try:
        log = run_drop_experiment(drop_cfg)
        verdict = classify_stability(log)
    except (AnalysisError, ValueError) as exc:
        return SweepCell(f, k, b, "error", note=str(exc))
    stiffness = None
    note = ""
    if verdict == "stable":
        try:
            stiffness = estimate_stiffness(log)
        except AnalysisError as exc:
            note = f"stiffness: {exc}"
    return SweepCell(f, k, b, verdict, stiffness=stiffness, note=note)


def _meta_header(meta: dict) -> str:
    from .runlog import _meta_lines

    return "\n".join(_meta_lines(meta)) + "\n"


def write_cells_csv(report: SweepReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_meta_header(report.meta))
        fh.write("f_loop,k,b,verdict,stiffness,note\n")
        for c in report.cells:
            stiff = f"{c.stiffness:.9g}" if c.stiffness is not None else ""
            note = c.note.replace(",", ";")
            fh.write(f"{c.f_loop:.9g},{c.k:.9g},{c.b:.9g},{c.verdict},{stiff},{note}\n")


def write_summary_csv(report: SweepReport, path) -> None:
    """Per-frequency maxima: the first four columns mirror the hardware
    reference table (frequency, k, b, stiffness)."""
    with open(path, "w", newline="") as fh:
        fh.write(_meta_header(report.meta))
        fh.write("frequency,k,b,stiffness,max_stable_k_b0\n")
        for s in report.summaries:
            row = [f"{s.f_loop:.9g}"]
            for v in (s.best_k, s.best_b, s.best_stiffness, s.max_stable_k_b0):
                row.append(f"{v:.9g}" if v is not None else "")
            fh.write(",".join(row) + "\n")
