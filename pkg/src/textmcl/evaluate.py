"""Replay sequence logs through configured filter variants and score them.

Metrics follow the benchmark protocol: convergence is the first instant
the pose estimate comes within 0.5 m of ground truth, counted as a failure
when it happens after 95% of the sequence; the absolute trajectory error
is the mean translational / angular error over the estimates after the
convergence instant. Estimates are sampled after each correction step,
with ground truth interpolated to those instants.

Runs are deterministic given (log, configuration, seed); per-correction
wall-clock times are measured but are the one non-reproducible part of a
report.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import mcl
from .geometry import angle_diff
from .gridmap import DistanceField, OccupancyGrid, compute_edt
from .seqlog import (
    GroundTruthRecord,
    OdomRecord,
    ScanRecord,
    SequenceLog,
    TextRecord,
)
from .simulator import ScenarioBundle, generate_scenario, make_default_seeds
from .strategies import (
    StrategyConfig,
    StrategyState,
    active_sm_region,
    handle_detection,
    sm_log_factors,
)
from .textmap import DetectionHistograms, DetectionRecord, TextLikelihoodMap

CONVERGENCE_RADIUS = 0.5  # meters
CONVERGENCE_CUTOFF = 0.95  # fraction of sequence duration

CSV_HEADER = (
    "scenario,method,particles,seed,converged,t_conv_s,"
    "ate_trans_m,ate_ang_rad,mean_correct_ms,max_correct_ms"
)


@dataclass(frozen=True)
class FilterParams:
    """Filter-side knobs (defaults follow the benchmark parameter table)."""

    n_particles: int = 300
    sigma_odom: tuple[float, float, float] = (0.02, 0.02, 0.02)
    sigma_obs: float = 2.0
    r_max: float = 15.0
    d_xy: float = 0.05
    d_theta: float = 0.05
    stride: int = 1


@dataclass(frozen=True)
class RunReport:
    scenario: str
    method: str
    particles: int
    seed: int
    converged: bool
    t_conv_s: float | None
    ate_trans_m: float | None
    ate_ang_rad: float | None
    mean_correct_ms: float
    max_correct_ms: float
    degeneracy_events: int = 0

    def csv_row(self, with_timing: bool = True) -> str:
        """One CSV line per the report schema; ATE fields are empty for
        failed runs. Timing columns can be masked for byte-stable output."""
        cells = [
            self.scenario,
            self.method,
            str(self.particles),
            str(self.seed),
            "true" if self.converged else "false",
            repr(self.t_conv_s) if self.t_conv_s is not None else "",
            repr(self.ate_trans_m) if self.ate_trans_m is not None else "",
            repr(self.ate_ang_rad) if self.ate_ang_rad is not None else "",
            f"{self.mean_correct_ms:.3f}" if with_timing else "",
            f"{self.max_correct_ms:.3f}" if with_timing else "",
        ]
        return ",".join(cells)


def trajectory_from_log(log: SequenceLog) -> np.ndarray:
    """(n, 4) array [t, x, y, theta] of the log's ground-truth records."""
    rows = [
        (r.timestamp, r.pose.x, r.pose.y, r.pose.theta)
        for r in log.records
        if isinstance(r, GroundTruthRecord)
    ]
    return np.array(rows, dtype=np.float64).reshape(-1, 4)


def interpolate_trajectory(gt: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Linear interpolation of a [t, x, y, theta] trajectory; headings are
    interpolated along the shortest arc."""
    out = np.empty((len(times), 4))
    out[:, 0] = times
    out[:, 1] = np.interp(times, gt[:, 0], gt[:, 1])
    out[:, 2] = np.interp(times, gt[:, 0], gt[:, 2])
    out[:, 3] = np.mod(
        np.interp(times, gt[:, 0], np.unwrap(gt[:, 3])), 2.0 * math.pi
    )
    return out


def convergence_time(
    est: np.ndarray,
    gt: np.ndarray,
    radius: float = CONVERGENCE_RADIUS,
    cutoff: float = CONVERGENCE_CUTOFF,
) -> float | None:
    """Seconds from sequence start until the estimate first comes within
    ``radius`` of ground truth, or None when that happens after
    ``cutoff`` of the sequence duration (a failure)."""
    if len(est) == 0 or len(gt) == 0:
        raise ValueError("empty trajectory")
    t0 = gt[0, 0]
    duration = gt[-1, 0] - t0
    ref = interpolate_trajectory(gt, est[:, 0])
    err = np.hypot(est[:, 1] - ref[:, 1], est[:, 2] - ref[:, 2])
    hits = np.nonzero(err <= radius)[0]
    if len(hits) == 0:
        return None
    t_conv = est[hits[0], 0] - t0
    if t_conv > cutoff * duration:
        return None
    return float(t_conv)


def ate_after_convergence(
    est: np.ndarray,
    gt: np.ndarray,
    t_conv: float,
) -> tuple[float, float]:
    """(angular, translational) mean absolute error over the estimates at
    or after the convergence instant (seconds from sequence start)."""
    t0 = gt[0, 0]
    sel = est[:, 0] >= t0 + t_conv
    tail = est[sel]
    if len(tail) == 0:
        raise ValueError("no estimates after the convergence instant")
    ref = interpolate_trajectory(gt, tail[:, 0])
    trans = np.hypot(tail[:, 1] - ref[:, 1], tail[:, 2] - ref[:, 2])
    ang = np.abs(
        np.array([angle_diff(a, b) for a, b in zip(tail[:, 3], ref[:, 3])])
    )
    return float(ang.mean()), float(trans.mean())


def build_textmap_from_log(
    log: SequenceLog,
    grid: OccupancyGrid,
    tau: float = 0.0,
    cell_size: float = 0.25,
) -> TextLikelihoodMap:
    """Accumulate detection histograms over a training log and reduce them.

    Every ground-truth record registers a visit; every TEXT record becomes
    a detection stamped with the concurrent ground-truth pose.
    """
    hist = DetectionHistograms(cell_size=cell_size)
    current = None
    n_detections = 0
    for rec in log.records:
        if isinstance(rec, GroundTruthRecord):
            current = rec.pose
            hist.accumulate_visit(current)
        elif isinstance(rec, TextRecord):
            if current is None:
                raise ValueError("TEXT record before any ground-truth pose")
            ix, iy = grid.world_to_cell(current.x, current.y)
            if not grid.in_bounds(ix, iy):
                raise ValueError("detection pose outside the mapped area")
            hist.accumulate(
                DetectionRecord(
                    tag=rec.event.tag,
                    camera_id=rec.event.camera_id,
                    pose=current,
                    timestamp=rec.timestamp,
                )
            )
            n_detections += 1
    if n_detections == 0:
        raise ValueError(
            "training log contains no text detections; record a longer run"
        )
    tmap = hist.build(tau)
    if not tmap.regions:
        raise ValueError(
            f"no tag cleared the detection-rate threshold tau={tau}; lower it "
            "or record a longer training run"
        )
    return tmap


@dataclass
class RunResult:
    report: RunReport
    estimates: np.ndarray  # (n, 4) [t, x, y, theta], one row per correction


def run(
    log: SequenceLog,
    grid: OccupancyGrid,
    tmap: TextLikelihoodMap | None,
    strategy: StrategyConfig,
    params: FilterParams,
    seed: int,
    scenario_id: str = "",
    dfield: DistanceField | None = None,
    radius: float = CONVERGENCE_RADIUS,
    cutoff: float = CONVERGENCE_CUTOFF,
) -> RunResult:
    """Replay a log in timestamp order: predict on ODOM, gated correct on
    SCAN, strategy handling on TEXT; estimate after each correction."""
    if strategy.needs_textmap and tmap is None:
        raise ValueError(f"strategy {strategy.mode!r} requires a text map")
    if dfield is None:
        dfield = compute_edt(grid, params.r_max)
    rng = np.random.default_rng(seed)
    pset = mcl.init_uniform(params.n_particles, grid, rng)
    state = StrategyState()

    est_rows: list[tuple[float, float, float, float]] = []
    correct_ms: list[float] = []

    for rec in log.records:
        if isinstance(rec, OdomRecord):
            mcl.predict(pset, rec.delta, params.sigma_odom, rng)
        elif isinstance(rec, ScanRecord):
            if not mcl.should_correct(pset, params.d_xy, params.d_theta):
                continue
            aux = None
            if strategy.mode in ("sm1", "sm2") and tmap is not None:
                region = active_sm_region(state, tmap, strategy, rec.timestamp)
                if region is not None:
                    aux = sm_log_factors(pset.poses, region, strategy)
            t_start = time.perf_counter()
            mcl.correct(
                pset,
                rec.scan,
                dfield,
                params.sigma_obs,
                rng,
                stride=params.stride,
                aux_log_weights=aux,
            )
            correct_ms.append((time.perf_counter() - t_start) * 1e3)
            est = mcl.estimate_pose(pset)
            est_rows.append((rec.timestamp, est.x, est.y, est.theta))
        elif isinstance(rec, TextRecord) and strategy.mode != "none":
            handle_detection(pset, rec.event, tmap, strategy, state, rng)

    gt = trajectory_from_log(log)
    if len(gt) == 0:
        raise ValueError("log carries no ground truth")
    est = np.array(est_rows, dtype=np.float64).reshape(-1, 4)

    t_conv = convergence_time(est, gt, radius, cutoff) if len(est) else None
    ate_ang = ate_trans = None
    if t_conv is not None:
        ate_ang, ate_trans = ate_after_convergence(est, gt, t_conv)

    report = RunReport(
        scenario=scenario_id,
        method=strategy.mode,
        particles=params.n_particles,
        seed=seed,
        converged=t_conv is not None,
        t_conv_s=t_conv,
        ate_trans_m=ate_trans,
        ate_ang_rad=ate_ang,
        mean_correct_ms=float(np.mean(correct_ms)) if correct_ms else 0.0,
        max_correct_ms=float(np.max(correct_ms)) if correct_ms else 0.0,
        degeneracy_events=pset.degeneracy_events,
    )
    return RunResult(report=report, estimates=est)


def strategy_for_method(method: str, bundle: ScenarioBundle) -> StrategyConfig:
    """Strategy configuration for a benchmark method name; the
    seed-locations ablation derives its seeds from the world's tags."""
    if method == "seed_locations":
        return StrategyConfig(mode=method, seeds=make_default_seeds(bundle.world))
    return StrategyConfig(mode=method)


class _BundleCache:
    """Scenario artifacts shared across sweep cells: generated worlds and
    logs per (kind, seed), text maps, and distance fields keyed by grid
    content."""

    def __init__(self):
        self.bundles: dict[tuple[str, int], ScenarioBundle] = {}
        self.textmaps: dict[tuple[str, int], TextLikelihoodMap] = {}
        self.dfields: dict[tuple, DistanceField] = {}

    def bundle(self, kind: str, seed: int) -> ScenarioBundle:
        key = (kind, seed)
        if key not in self.bundles:
            self.bundles[key] = generate_scenario(kind, seed)
        return self.bundles[key]

    def textmap(self, kind: str, seed: int) -> TextLikelihoodMap:
        key = (kind, seed)
        if key not in self.textmaps:
            b = self.bundle(kind, seed)
            self.textmaps[key] = build_textmap_from_log(b.training_log, b.base_map)
        return self.textmaps[key]

    def dfield(self, grid: OccupancyGrid, r_max: float) -> DistanceField:
        digest = hashlib.sha1(grid.cells.tobytes()).hexdigest()
        key = (digest, grid.width, grid.height, grid.resolution,
               grid.origin_x, grid.origin_y, r_max)
        if key not in self.dfields:
            self.dfields[key] = compute_edt(grid, r_max)
        return self.dfields[key]


def sweep(
    kinds: list[str],
    methods: list[str],
    counts: list[int],
    seeds: list[int],
    params: FilterParams = FilterParams(),
    csv_path=None,
    plot_path=None,
    progress: bool = False,
) -> list[RunReport]:
    """Cross product of scenario kinds, methods, particle counts, and
    seeds. Optionally writes the CSV report and a whitespace-separated
    aggregate table (mean ATE and failure rate per cell) for plotting."""
    cache = _BundleCache()
    reports: list[RunReport] = []
    for kind in kinds:
        for seed in seeds:
            bundle = cache.bundle(kind, seed)
            dfield = cache.dfield(bundle.base_map, params.r_max)
            for method in methods:
                strategy = strategy_for_method(method, bundle)
                tmap = (
                    cache.textmap(kind, seed)
                    if strategy.needs_textmap
                    else None
                )
                for n in counts:
                    result = run(
                        bundle.eval_log,
                        bundle.base_map,
                        tmap,
                        strategy,
                        replace(params, n_particles=n),
                        seed,
                        scenario_id=kind,
                        dfield=dfield,
                    )
                    reports.append(result.report)
                    if progress:
                        print(result.report.csv_row(), flush=True)
    if csv_path is not None:
        write_csv(reports, csv_path)
    if plot_path is not None:
        write_plot_data(reports, plot_path)
    return reports


def write_csv(reports: list[RunReport], path, with_timing: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in reports:
            fh.write(r.csv_row(with_timing) + "\n")


def aggregate(
    reports: list[RunReport],
    failure_ate: float | None = None,
) -> dict[tuple[str, str, int], dict[str, float]]:
    """Mean metrics per (scenario, method, particles) cell.

    ``mean_ate`` averages over converged runs only unless ``failure_ate``
    is given, in which case failed runs enter the mean at that penalty.
    """
    cells: dict[tuple[str, str, int], list[RunReport]] = {}
    for r in reports:
        cells.setdefault((r.scenario, r.method, r.particles), []).append(r)
    out = {}
    for key, rs in sorted(cells.items()):
        ates = []
        tconvs = []
        for r in rs:
            if r.converged:
                ates.append(r.ate_trans_m)
                tconvs.append(r.t_conv_s)
            elif failure_ate is not None:
                ates.append(failure_ate)
        out[key] = {
            "runs": float(len(rs)),
            "failures": float(sum(not r.converged for r in rs)),
            "failure_rate": sum(not r.converged for r in rs) / len(rs),
            "mean_ate": float(np.mean(ates)) if ates else math.nan,
            "mean_t_conv": float(np.mean(tconvs)) if tconvs else math.nan,
            "mean_correct_ms": float(np.mean([r.mean_correct_ms for r in rs])),
        }
    return out


def write_plot_data(reports: list[RunReport], path) -> None:
    """Aggregate table with whitespace-separated columns, one row per
    (scenario, method, particles) cell."""
    agg = aggregate(reports)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "# scenario method particles mean_ate_m failure_rate "
            "mean_t_conv_s mean_correct_ms\n"
        )
        for (kind, method, n), stats in agg.items():
            fh.write(
                f"{kind} {method} {n} {stats['mean_ate']:.6f} "
                f"{stats['failure_rate']:.3f} {stats['mean_t_conv']:.3f} "
                f"{stats['mean_correct_ms']:.3f}\n"
            )
