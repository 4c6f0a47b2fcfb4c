"""Deterministic synthetic worlds: corridor/office scenarios with
toggleable doors, wall-mounted text tags, and optional moving obstacles.

The evaluation challenge mirrors a building whose corridor doors were all
closed after the map was made: the filter localizes against the doors-open
base map while scans come from the doors-closed realization. Corridor
structure repeats with a fixed period (identical rooms and wall niches),
so LiDAR alone cannot tell the repeats apart away from the corridor ends;
text tags are the disambiguating cue.

Ground truth advances exactly by the commanded motion; noise touches only
the emitted odometry and scan streams. All randomness flows through
explicit seeded generators, so logs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import OdomDelta, Pose, angle_diff, wrap_angle
from .gridmap import FREE, OCCUPIED, OccupancyGrid, raycast_batch
from .seqlog import (
    GroundTruthRecord,
    OdomRecord,
    ScanRecord,
    SequenceLog,
    TextRecord,
    make_scan,
    scan_bearings,
)
from .strategies import SeedLocation, TextDetectionEvent
from .textmap import NUM_CAMERAS

SCENARIO_KINDS = ("corridor_closed", "office_static", "office_dynamic")


@dataclass(frozen=True)
class Door:
    """A wall opening; closed doors are rendered occupied in the realized
    grid. The span must be flanked by wall structure."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    open: bool = True


@dataclass(frozen=True)
class WallTag:
    """A readable sign: world position of its face (in free space, adjacent
    to the wall it hangs on) and the outward wall normal."""

    tag: str
    x: float
    y: float
    normal: float  # radians


@dataclass(frozen=True)
class MovingDisc:
    """A disc obstacle ping-ponging along a waypoint polyline; rendered
    into raycasts only, never into any grid."""

    waypoints: tuple[tuple[float, float], ...]
    radius: float
    speed: float

    def position(self, t: float) -> tuple[float, float]:
        pts = self.waypoints
        if len(pts) == 1:
            return pts[0]
        seg_len = [
            math.dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1)
        ]
        total = sum(seg_len)
        s = math.fmod(self.speed * t, 2.0 * total)
        if s > total:
            s = 2.0 * total - s
        for i, L in enumerate(seg_len):
            if s <= L or i == len(seg_len) - 1:
                f = 0.0 if L == 0 else s / L
                ax, ay = pts[i]
                bx, by = pts[i + 1]
                return (ax + f * (bx - ax), ay + f * (by - ay))
            s -= L
        return pts[-1]  # pragma: no cover


@dataclass(frozen=True)
class World:
    base: OccupancyGrid  # doors rendered open
    doors: tuple[Door, ...]
    tags: tuple[WallTag, ...]
    obstacles: tuple[MovingDisc, ...] = ()

    def __post_init__(self):
        names = [t.tag for t in self.tags]
        if len(names) != len(set(names)):
            raise ValueError("tag identifiers must be unique")


@dataclass(frozen=True)
class SimConfig:
    odom_period: float = 0.05
    scan_period: float = 0.1
    camera_period: float = 0.2
    speed: float = 0.3  # m/s along straight segments
    turn_rate: float = 0.6  # rad/s when turning in place
    k_beams: int = 360
    max_range: float = 30.0
    sigma_range: float = 0.01
    sigma_odom: tuple[float, float, float] = (0.003, 0.003, 0.001)
    d_detect: float = 2.5
    max_incidence: float = math.radians(60.0)
    p_detect: float = 0.8


def realize_world(world: World) -> OccupancyGrid:
    """Render door states into a copy of the base grid: closed spans become
    occupied, open spans free. Raises if a door span is off-structure."""
    grid = world.base
    cells = np.array(grid.cells)
    res = grid.resolution
    for door in world.doors:
        ix0 = int(round((door.x_min - grid.origin_x) / res))
        ix1 = int(round((door.x_max - grid.origin_x) / res))
        iy0 = int(round((door.y_min - grid.origin_y) / res))
        iy1 = int(round((door.y_max - grid.origin_y) / res))
        if not (grid.in_bounds(ix0 - 1, iy0) and grid.in_bounds(ix1, iy1 - 1)):
            raise ValueError(f"door span {door} leaves the grid")
        flank_w = grid.cells[iy0:iy1, ix0 - 1]
        flank_e = grid.cells[iy0:iy1, ix1]
        if not (np.all(flank_w == OCCUPIED) and np.all(flank_e == OCCUPIED)):
            raise ValueError(f"door span {door} is not flanked by wall structure")
        cells[iy0:iy1, ix0:ix1] = FREE if door.open else OCCUPIED
    return OccupancyGrid(
        width=grid.width,
        height=grid.height,
        resolution=res,
        origin_x=grid.origin_x,
        origin_y=grid.origin_y,
        cells=cells,
    )


def simulate_detection(
    world: World,
    realized: OccupancyGrid,
    pose: Pose,
    config: SimConfig,
    rng: np.random.Generator,
) -> list[TextDetectionEvent]:
    """Geometric stand-in for a text-spotting pipeline on four cameras
    covering 360 degrees (offsets 0/90/180/270 from the robot heading).

    A tag fires iff it is within range, within the incidence cone of its
    wall normal, unoccluded on the realized grid, and a Bernoulli draw
    with p_detect succeeds.
    """
    events: list[TextDetectionEvent] = []
    for tag in world.tags:
        vx = tag.x - pose.x
        vy = tag.y - pose.y
        dist = math.hypot(vx, vy)
        if dist > config.d_detect or dist < 1e-9:
            continue
        incidence = abs(angle_diff(math.atan2(-vy, -vx), tag.normal))
        if incidence > config.max_incidence:
            continue
        bearing = math.atan2(vy, vx)
        rel = angle_diff(bearing, pose.theta)
        camera = int(round(rel / (math.pi / 2.0))) % NUM_CAMERAS
        hit = raycast_batch(
            realized, pose.x, pose.y, np.array([bearing]), dist, block_unknown=True
        )[0]
        if hit < dist - realized.resolution:
            continue
        if rng.random() < config.p_detect:
            events.append(TextDetectionEvent(tag.tag, camera, 0.0))
    return events


@dataclass
class StepOutput:
    gt: GroundTruthRecord
    odom: OdomRecord | None
    scan: ScanRecord | None
    detections: list[TextRecord]
    collided: bool = False


class Simulator:
    """Steps a robot through a realized world, emitting the sensor streams.

    One ``step`` call advances one odometry period; scans and camera
    frames are emitted on their own coarser cadences.
    """

    def __init__(self, world: World, config: SimConfig, start: Pose):
        self.world = world
        self.config = config
        self.realized = realize_world(world)
        self.pose = start
        self.tick = 0
        self._scan_every = max(1, round(config.scan_period / config.odom_period))
        self._camera_every = max(1, round(config.camera_period / config.odom_period))

    @property
    def time(self) -> float:
        return self.tick * self.config.odom_period

    def _make_scan(self, t: float, rng: np.random.Generator) -> ScanRecord:
        cfg = self.config
        bearings = scan_bearings(cfg.k_beams) + self.pose.theta
        ranges = raycast_batch(
            self.realized, self.pose.x, self.pose.y, bearings, cfg.max_range
        )
        for disc in self.world.obstacles:
            cx, cy = disc.position(t)
            ox = cx - self.pose.x
            oy = cy - self.pose.y
            along = ox * np.cos(bearings) + oy * np.sin(bearings)
            perp_sq = (ox * ox + oy * oy) - along**2
            inside = perp_sq <= disc.radius**2
            t_hit = along - np.sqrt(
                np.where(inside, disc.radius**2 - perp_sq, 0.0)
            )
            hits = inside & (t_hit > 0) & (t_hit < ranges)
            ranges = np.where(hits, t_hit, ranges)
        no_return = ranges >= cfg.max_range
        noisy = ranges + rng.normal(0.0, cfg.sigma_range, cfg.k_beams)
        noisy = np.clip(noisy, self.realized.resolution * 0.5, cfg.max_range)
        noisy[no_return] = np.inf
        return ScanRecord(t, make_scan(t, noisy))

    def step(self, delta: OdomDelta, rng: np.random.Generator) -> StepOutput:
        cfg = self.config
        self.tick += 1
        t = self.time

        proposed = self.pose.compose(delta)
        collided = self.realized.state_at(proposed.x, proposed.y) != FREE
        actual = OdomDelta(0.0, 0.0, 0.0) if collided else delta
        if not collided:
            self.pose = proposed

        drift = rng.normal(0.0, 1.0, 3) * np.asarray(cfg.sigma_odom)
        odom = OdomRecord(
            t,
            OdomDelta(actual.dx + drift[0], actual.dy + drift[1], actual.dtheta + drift[2]),
        )
        gt = GroundTruthRecord(t, self.pose)

        scan = None
        if self.tick % self._scan_every == 0:
            scan = self._make_scan(t, rng)

        detections: list[TextRecord] = []
        if self.tick % self._camera_every == 0:
            for ev in simulate_detection(self.world, self.realized, self.pose, cfg, rng):
                detections.append(TextRecord(t, replace(ev, timestamp=t)))
        return StepOutput(gt=gt, odom=odom, scan=scan, detections=detections, collided=collided)


# ---------------------------------------------------------------------------
# Corridor world construction
#
# Layout (meters, y upward). All repeating structure shares a 4 m period so
# the corridor is self-similar away from its ends:
#
#   [9.0, 9.2)  north outer wall
#   [6.0, 9.0)  wall niches (open alcoves) at x = 4j, 2.0 m wide
#   [5.8, 6.0)  corridor north wall
#   [3.3, 5.8)  corridor (2.5 m)
#   [3.1, 3.3)  corridor south wall with 1.4 m doorways at x = 4k + 2
#   [0.1, 3.1)  rooms behind the doorways
#   [0.0, 0.1)  south outer wall
# ---------------------------------------------------------------------------

CORRIDOR_LENGTH = 48.0
CORRIDOR_RESOLUTION = 0.05
CORRIDOR_LANE_Y = 4.55
CORRIDOR_DOOR_XS = tuple(4.0 * k + 2.0 for k in range(1, 11))  # 6 .. 42
CORRIDOR_NICHE_XS = tuple(4.0 * j for j in range(1, 12))  # 4 .. 44
EVAL_START_XS = tuple(11.0 + 1.0 * i for i in range(10))
EVAL_END_X = 37.0
CORRIDOR_SENSOR_RANGE = 10.0
CORRIDOR_D_DETECT = 2.3


def _carve(cells: np.ndarray, res: float, x0: float, x1: float, y0: float, y1: float,
           state: int = FREE) -> None:
    cells[round(y0 / res):round(y1 / res), round(x0 / res):round(x1 / res)] = state


def build_corridor_world(doors_open: bool, obstacles: tuple[MovingDisc, ...] = ()) -> World:
    res = CORRIDOR_RESOLUTION
    width = round(CORRIDOR_LENGTH / res)
    height = round(9.2 / res)
    cells = np.full((height, width), OCCUPIED, dtype=np.uint8)

    _carve(cells, res, 0.2, CORRIDOR_LENGTH - 0.2, 3.3, 5.8)  # corridor
    for sx in CORRIDOR_NICHE_XS:
        _carve(cells, res, sx - 1.0, sx + 1.0, 5.8, 9.0)  # niche + mouth

    doors = []
    tags = []
    for k, cx in enumerate(CORRIDOR_DOOR_XS):
        _carve(cells, res, cx - 1.9, cx + 1.9, 0.1, 3.1)  # room
        doors.append(
            Door(x_min=cx - 0.7, x_max=cx + 0.7, y_min=3.1, y_max=3.3, open=doors_open)
        )
        # sign on the corridor-side wall face, west of the doorway
        tag_x = cx - 1.05
        tags.append(WallTag(tag=f"Room{k + 1}", x=tag_x, y=3.325, normal=math.pi / 2))

    grid = OccupancyGrid(
        width=width,
        height=height,
        resolution=res,
        origin_x=0.0,
        origin_y=0.0,
        cells=cells,
    )
    # base map always renders doors open; 'doors_open' sets the scenario state
    base = realize_world(
        World(base=grid, doors=tuple(replace(d, open=True) for d in doors),
              tags=tuple(tags))
    )
    return World(base=base, doors=tuple(doors), tags=tuple(tags), obstacles=obstacles)


def corridor_sim_config() -> SimConfig:
    return SimConfig(max_range=CORRIDOR_SENSOR_RANGE, d_detect=CORRIDOR_D_DETECT)


def _drive(
    sim: Simulator,
    log: SequenceLog,
    waypoints: list[tuple[float, float]],
    rng: np.random.Generator,
) -> None:
    """Follow waypoints at constant speed with turn-in-place at corners,
    appending every emitted record to the log."""
    cfg = sim.config
    ds = cfg.speed * cfg.odom_period
    dth = cfg.turn_rate * cfg.odom_period
    for wx, wy in waypoints:
        heading = math.atan2(wy - sim.pose.y, wx - sim.pose.x)
        turn = angle_diff(heading, sim.pose.theta)
        n_turn = round(abs(turn) / dth)
        for _ in range(n_turn):
            _log_step(sim, log, OdomDelta(0.0, 0.0, turn / n_turn), rng)
        dist = math.dist((sim.pose.x, sim.pose.y), (wx, wy))
        n_fwd = round(dist / ds)
        for _ in range(n_fwd):
            _log_step(sim, log, OdomDelta(dist / n_fwd, 0.0, 0.0), rng)


def _log_step(sim: Simulator, log: SequenceLog, delta: OdomDelta,
              rng: np.random.Generator) -> None:
    out = sim.step(delta, rng)
    log.append(out.gt)
    log.append(out.odom)
    if out.scan is not None:
        log.append(out.scan)
    for rec in out.detections:
        log.append(rec)


def _log_initial(sim: Simulator, log: SequenceLog, rng: np.random.Generator) -> None:
    log.append(GroundTruthRecord(0.0, sim.pose))
    log.append(sim._make_scan(0.0, rng))
    for ev in simulate_detection(sim.world, sim.realized, sim.pose, sim.config, rng):
        log.append(TextRecord(0.0, replace(ev, timestamp=0.0)))


@dataclass
class ScenarioBundle:
    kind: str
    seed: int
    world: World  # evaluation door states
    base_map: OccupancyGrid  # doors-open map given to the filter
    training_log: SequenceLog  # doors-open data-collection run
    eval_log: SequenceLog
    config: SimConfig


def generate_scenario(kind: str, seed: int) -> ScenarioBundle:
    """Build a reproducible fixture: world, doors-open base map, a
    doors-open training log for the text map, and the evaluation log
    driven under the scenario's door states.

    Evaluation runs start at one of ten offsets along the corridor
    (selected by seed modulo 10) and drive east through the ambiguous
    mid-corridor stretch.
    """
    if kind not in SCENARIO_KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}; choose from {SCENARIO_KINDS}")

    if kind == "office_dynamic":
        obstacles = (
            MovingDisc(waypoints=((14.0, 4.1), (30.0, 5.2)), radius=0.3, speed=0.6),
            MovingDisc(waypoints=((34.0, 4.9), (20.0, 4.0)), radius=0.25, speed=0.45),
        )
    else:
        obstacles = ()

    doors_open = kind != "corridor_closed"
    world = build_corridor_world(doors_open=doors_open, obstacles=obstacles)
    training_world = build_corridor_world(doors_open=True)
    config = corridor_sim_config()

    train_rng = np.random.default_rng([seed, 0])
    train_sim = Simulator(training_world, config, Pose(1.2, CORRIDOR_LANE_Y, 0.0))
    training_log = SequenceLog()
    _log_initial(train_sim, training_log, train_rng)
    _drive(
        train_sim,
        training_log,
        [(CORRIDOR_LENGTH - 1.2, CORRIDOR_LANE_Y), (1.2, CORRIDOR_LANE_Y)],
        train_rng,
    )

    eval_rng = np.random.default_rng([seed, 1])
    start_x = EVAL_START_XS[seed % len(EVAL_START_XS)]
    eval_sim = Simulator(world, config, Pose(start_x, CORRIDOR_LANE_Y, 0.0))
    eval_log = SequenceLog()
    _log_initial(eval_sim, eval_log, eval_rng)
    _drive(eval_sim, eval_log, [(EVAL_END_X, CORRIDOR_LANE_Y)], eval_rng)

    return ScenarioBundle(
        kind=kind,
        seed=seed,
        world=world,
        base_map=world.base,
        training_log=training_log,
        eval_log=eval_log,
        config=config,
    )


def make_default_seeds(
    world: World,
    lane_y: float = CORRIDOR_LANE_Y,
    sigma_xy: float = 0.8,
    sigma_theta: float = 1.5,
) -> dict[str, SeedLocation]:
    """Hand-picked-style injection seeds for the seed-locations ablation:
    a point on the travel lane in front of each sign. Heading is unknown
    to a map annotator, hence the wide angular spread."""
    return {
        t.tag: SeedLocation(x=t.x, y=lane_y, theta=0.0,
                            sigma_xy=sigma_xy, sigma_theta=sigma_theta)
        for t in world.tags
    }


def world_summary(world: World, config: SimConfig) -> dict:
    """JSON-ready description of a world and its simulation parameters."""
    return {
        "grid": {
            "width": world.base.width,
            "height": world.base.height,
            "resolution": world.base.resolution,
            "origin": [world.base.origin_x, world.base.origin_y],
        },
        "doors": [
            {
                "x_min": d.x_min,
                "x_max": d.x_max,
                "y_min": d.y_min,
                "y_max": d.y_max,
                "open": d.open,
            }
            for d in world.doors
        ],
        "tags": [
            {"tag": t.tag, "x": t.x, "y": t.y, "normal": t.normal}
            for t in world.tags
        ],
        "obstacles": [
            {
                "waypoints": [list(p) for p in o.waypoints],
                "radius": o.radius,
                "speed": o.speed,
            }
            for o in world.obstacles
        ],
        "sim": {
            "odom_period": config.odom_period,
            "scan_period": config.scan_period,
            "camera_period": config.camera_period,
            "speed": config.speed,
            "turn_rate": config.turn_rate,
            "k_beams": config.k_beams,
            "max_range": config.max_range,
            "sigma_range": config.sigma_range,
            "sigma_odom": list(config.sigma_odom),
            "d_detect": config.d_detect,
            "max_incidence": config.max_incidence,
            "p_detect": config.p_detect,
        },
    }
