"""Episode simulation: random worlds, unicycle dynamics, ping synthesis and
ground-truth collision checks.

World frame: x east, y north, heading counter-clockwise from +x. The vehicle
starts at the middle of the west edge heading east; obstacles sit 50-100 m
ahead of it.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acoustics as ac
from .acoustics import BeamSpec, EnvironmentParams, SonarParams
from .decision import (
    GO_STRAIGHT,
    TURN_LEFT,
    TURN_RIGHT,
    ActionModel,
    LossModel,
    action_ensemble,
    action_risks,
    escape_ensemble,
    collision_probability,
    resolve_action,
    threshold_decide,
)
from .errors import ConfigurationError, GenerationError
from .occupancy import PingSet, PredictedLevels, VelocityBelief, bayes_update, build_map, format_map, propagate

WORLD_STREAM, DYNAMICS_STREAM, PING_STREAM = 0, 1, 2

FORWARD_SPACING = 0.8037297131658145  # 8 elements, 5 dB at +-5 deg
SIDE_SPACING = 0.8220303717280838  # 4 elements, 5 dB at +-10 deg
VERTICAL_SPACING = 0.8037297131658145  # 8 elements, 5 dB at +-5 deg elevation


# -- parameter blocks ---------------------------------------------------------


@dataclass(frozen=True)
class AcousticParams:
    environment: EnvironmentParams = field(default_factory=EnvironmentParams)
    sonar: SonarParams = field(default_factory=SonarParams)
    forward_elements: int = 8
    forward_spacing: float = FORWARD_SPACING
    forward_half_width: float = 5.0
    side_elements: int = 4
    side_spacing: float = SIDE_SPACING
    side_half_width: float = 10.0
    side_offset: float = 15.0
    vertical_elements: int = 8
    vertical_spacing: float = VERTICAL_SPACING
    vertical_width: float = 10.0  # deg, 5 dB full width in elevation
    auto_calibrate: bool = True
    calibration_margin: float = 3.0  # dB above the floor at max range
    calibration_ts: float = -30.0
    fluctuation: bool = True


@dataclass(frozen=True)
class MapParams:
    prior: float = 0.5
    sigma_z: float = 3.0
    nominal_ts: float = -30.0
    v_std: float = 0.1
    w_std: float = 0.01
    nodes: int = 5
    floor: float = 1e-4  # episode maps are kept within [floor, 1 - floor]

    def __post_init__(self):
        if not 0.0 < self.prior < 1.0:
            raise ConfigurationError(f"occupancy.prior must be in (0, 1), got {self.prior}")
        if self.sigma_z <= 0:
            raise ConfigurationError(f"occupancy.sigma_z must be positive, got {self.sigma_z}")
        if not 0.0 <= self.floor < 0.5:
            raise ConfigurationError(f"occupancy.floor must be in [0, 0.5), got {self.floor}")
        VelocityBelief(0.0, self.v_std, 0.0, self.w_std, self.nodes)


@dataclass(frozen=True)
class DecisionParams:
    loss: LossModel = field(default_factory=LossModel)
    actions: ActionModel = field(default_factory=ActionModel)
    unobserved_occupancy: float = 0.05
    escape_speed_std: float = 0.7  # m/s, surge dispersion of the single-beam escape arcs
    escape_samples: int = 15
    tie_break: str = "exposure"  # three beam: ranking of tied or saturated actions
    turn_memory: float = 3.5  # s; single beam repeats its last turn if re-triggered this soon

    def __post_init__(self):
        if not 0.0 <= self.unobserved_occupancy <= 1.0:
            raise ConfigurationError("decision.unobserved_occupancy must be in [0, 1]")
        if self.escape_speed_std < 0:
            raise ConfigurationError("decision.escape_speed_std must be nonnegative")
        if self.escape_samples < 1:
            raise ConfigurationError("decision.escape_samples must be >= 1")
        if self.turn_memory < 0:
            raise ConfigurationError("decision.turn_memory must be nonnegative")
        if self.tie_break not in ("index", "exposure"):
            raise ConfigurationError("decision.tie_break must be 'index' or 'exposure'")


@dataclass(frozen=True)
class WorldParams:
    n_obstacles: int = 10
    obstacle_radius: float = 2.0
    extent: float = 100.0
    band_near: float = 50.0
    band_far: float = 100.0
    ts_min: float = -30.0
    ts_max: float = -20.0

    def __post_init__(self):
        if self.n_obstacles < 0:
            raise ConfigurationError("worldsim.n_obstacles must be >= 0")
        if self.obstacle_radius <= 0:
            raise ConfigurationError("worldsim.obstacle_radius must be positive")
        if self.ts_min < -30.0 or self.ts_max < self.ts_min:
            raise ConfigurationError("worldsim target strengths must satisfy -30 <= ts_min <= ts_max")


@dataclass(frozen=True)
class VehicleParams:
    speed: float = 5.0 * ac.KNOT  # believed surge speed, m/s
    radius: float = 0.5
    max_yaw_rate: float = 0.3
    max_yaw_accel: float = 0.5
    dt: float = 0.1
    heading_gain: float = 0.1  # 1/s, course keeping under a^0
    course_rate: float = 0.05  # rad/s cap on course-keeping yaw rate
    max_epochs: int = 200

    def __post_init__(self):
        if self.speed <= 0:
            raise ConfigurationError("vehicle speed must be positive")
        if self.radius <= 0:
            raise ConfigurationError("vehicle radius must be positive")
        if self.dt <= 0 or self.max_yaw_rate <= 0 or self.max_yaw_accel <= 0:
            raise ConfigurationError("vehicle dt and yaw limits must be positive")


@dataclass(frozen=True)
class DynamicsNoise:
    surge_bias: float = 0.0  # m/s added to the believed speed
    surge_std: float = 0.0
    yaw_bias: float = 0.0  # rad/s
    yaw_std: float = 0.0

    @property
    def enabled(self) -> bool:
        return self.surge_std > 0 or self.yaw_std > 0


@dataclass(frozen=True)
class SimConfig:
    acoustics: AcousticParams = field(default_factory=AcousticParams)
    occupancy: MapParams = field(default_factory=MapParams)
    decision: DecisionParams = field(default_factory=DecisionParams)
    world: WorldParams = field(default_factory=WorldParams)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    noise: DynamicsNoise = field(default_factory=DynamicsNoise)

    def __post_init__(self):
        tau = self.acoustics.sonar.ping_interval
        ratio = tau / self.vehicle.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigurationError("ping_interval must be an integer multiple of the control dt")


# -- domain types ---------------------------------------------------------------


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float
    target_strength: float


@dataclass(frozen=True)
class World:
    obstacles: tuple
    environment: EnvironmentParams
    extent: float = 100.0

    @property
    def seafloor_depth(self) -> float:
        return self.environment.seafloor_depth

    @property
    def sonar_depth(self) -> float:
        return self.environment.sonar_depth

    def digest(self) -> str:
        h = hashlib.sha256()
        for o in self.obstacles:
            h.update(np.array([o.x, o.y, o.radius, o.target_strength]).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float  # true surge
    yaw_rate: float  # true yaw rate
    believed_speed: float
    radius: float = 0.5

    def __post_init__(self):
        if self.speed <= 0 or self.believed_speed <= 0:
            raise ConfigurationError("vehicle must keep a positive forward speed")
        if self.radius <= 0:
            raise ConfigurationError("vehicle radius must be positive")


@dataclass
class EpisodeOutcome:
    collided: bool
    min_clearance: float
    path: np.ndarray  # (n, 3) x, y, heading
    interventions: int
    epochs: int
    reached_goal: bool = False
    world_hash: str = ""
    log: list = field(default_factory=list, repr=False)


# -- beams and calibration -----------------------------------------------------


def make_beams(params: AcousticParams, n_beams: int) -> tuple:
    """Port-to-starboard beam list for a one- or three-beam sonar."""
    vert = (params.vertical_elements, params.vertical_spacing)
    fwd = BeamSpec(
        0.0,
        ac.planar_array(params.forward_elements, params.forward_spacing, *vert),
        -params.forward_half_width,
        params.forward_half_width,
    )
    if n_beams == 1:
        return (fwd,)
    if n_beams != 3:
        raise ConfigurationError(f"beam mode must be 1 or 3, got {n_beams}")
    side = ac.planar_array(params.side_elements, params.side_spacing, *vert)
    off, hw = params.side_offset, params.side_half_width
    if abs(off - hw - params.forward_half_width) > 1e-9:
        raise ConfigurationError("side beams must abut the forward beam (side_offset - side_half_width = forward_half_width)")
    port = BeamSpec(-off, side, -off - hw, -off + hw)
    stbd = BeamSpec(off, side, off - hw, off + hw)
    return (port, fwd, stbd)


def _bin_centres(sonar: SonarParams) -> np.ndarray:
    return (np.arange(sonar.n_range) + 0.5) * sonar.cell_length


def _boundary_footprint(r, half_bin, height, width_rad):
    """Area of the annulus sector a range bin cuts on a flat boundary ``height`` away."""
    lo = np.sqrt(np.clip((r - half_bin) ** 2 - height**2, 0.0, None))
    hi = np.sqrt(np.clip((r + half_bin) ** 2 - height**2, 0.0, None))
    return 0.5 * width_rad * (hi**2 - lo**2)


@functools.lru_cache(maxsize=128)
def floor_components(beams: tuple, sonar: SonarParams, env: EnvironmentParams, vertical_width: float = 10.0) -> dict:
    """Deterministic (n_beams, n_range) levels in dB for volume, seafloor and
    surface reverberation and band noise. Reverberation levels with no
    contributing footprint are -inf."""
    r = _bin_centres(sonar)
    lc = sonar.cell_length
    f = sonar.frequency
    alpha = ac.absorption_coeff(f, env)
    tl = 20.0 * np.log10(np.maximum(r, 1.0)) + alpha * r / 1000.0
    base = sonar.source_level - 2.0 * tl
    out = {k: np.full((len(beams), len(r)), -np.inf) for k in ("volume", "seafloor", "surface")}
    psi_v = math.radians(vertical_width)
    for j, beam in enumerate(beams):
        psi_h = math.radians(beam.width)
        out["volume"][j] = base + env.volume_scattering + 10.0 * np.log10(r**2 * psi_h * psi_v * lc)
        for kind, h in (("seafloor", env.altitude), ("surface", env.sonar_depth)):
            area = _boundary_footprint(r, lc / 2.0, h, psi_h)
            for k in np.nonzero(area > 0)[0]:
                graze = math.degrees(math.asin(min(1.0, h / r[k])))
                graze = max(graze, 1e-6)
                s = ac.backscatter_strength(kind, graze, env, f)
                vloss = ac.beam_pattern_loss(beam, beam.center_angle, elevation=graze)
                out[kind][j, k] = base[k] + s + 10.0 * math.log10(area[k]) - 2.0 * vloss
    noise = ac.ambient_noise_level(f, env) + 10.0 * math.log10(sonar.bandwidth)
    out["noise"] = np.full((len(beams), len(r)), noise)
    return out


def floor_level(beams, sonar, env, vertical_width: float = 10.0) -> np.ndarray:
    comps = floor_components(tuple(beams), sonar, env, vertical_width)
    lin = sum(10.0 ** (v / 10.0) for v in comps.values())
    return 10.0 * np.log10(lin)


def calibrate_source_level(params: AcousticParams, beams: tuple) -> SonarParams:
    """Source level placing a ``calibration_ts`` target on the forward-beam
    axis at max range ``calibration_margin`` dB above the predicted floor."""
    sonar, env = params.sonar, params.environment
    fwd = next(b for b in beams if b.cutoff_low < 0.0 <= b.cutoff_high)
    probe = dataclasses.replace(sonar, source_level=0.0)
    comps = floor_components((fwd,), probe, env, params.vertical_width)
    last = sonar.n_range - 1
    noise = 10.0 ** (comps["noise"][0, last] / 10.0)
    reverb = sum(10.0 ** (comps[k][0, last] / 10.0) for k in ("volume", "seafloor", "surface"))
    echo = 10.0 ** (ac.echo_level(params.calibration_ts, sonar.max_range, 0.0, fwd, probe, env) / 10.0)
    margin = 10.0 ** (params.calibration_margin / 10.0)
    if echo <= margin * reverb:
        raise ConfigurationError("calibration margin unreachable: max-range target is reverberation limited")
    x = margin * noise / (echo - margin * reverb)
    return dataclasses.replace(sonar, source_level=10.0 * math.log10(x))


def effective_sonar(params: AcousticParams) -> SonarParams:
    """The sonar block after source-level calibration (if enabled).

    Calibration always uses the three-beam layout's forward beam, which is
    the same beam a single-beam sonar carries.
    """
    if not params.auto_calibrate:
        return params.sonar
    return _calibrated(params)


@functools.lru_cache(maxsize=64)
def _calibrated(params: AcousticParams) -> SonarParams:
    return calibrate_source_level(params, make_beams(params, 1))


def number_of_looks(sonar: SonarParams, env: EnvironmentParams) -> int:
    """Independent fluctuation samples averaged within one map range bin."""
    resolution = ac.sound_speed(env) * sonar.pulse_length / 2.0
    return max(1, int(round(sonar.cell_length / resolution)))


def predicted_levels(beams, sonar, env, nominal_ts: float, sigma: float, vertical_width: float = 10.0) -> PredictedLevels:
    floor = floor_level(beams, sonar, env, vertical_width)  # (beams, ranges)
    r = np.clip(_bin_centres(sonar), 1.0, sonar.max_range)
    echo = np.array(
        [[ac.echo_level(nominal_ts, rk, b.center_angle, b, sonar, env) for rk in r] for b in beams]
    )
    occ = 10.0 * np.log10(10.0 ** (floor / 10.0) + 10.0 ** (echo / 10.0))
    return PredictedLevels(occ.T.copy(), floor.T.copy(), sigma)


# -- world -------------------------------------------------------------------------


def generate_world(
    seed,
    n_obstacles: int,
    radius: float,
    env: EnvironmentParams | None = None,
    params: WorldParams | None = None,
    start=(0.0, 50.0),
    vehicle_radius: float = 0.5,
    max_attempts: int = 10_000,
) -> World:
    """Obstacles uniform in the band ahead, rejection-sampled to be disjoint."""
    if n_obstacles < 0:
        raise ConfigurationError("n_obstacles must be >= 0")
    if radius <= 0:
        raise ConfigurationError("obstacle radius must be positive")
    env = env or EnvironmentParams()
    p = params or WorldParams()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    placed: list[Obstacle] = []
    attempts = 0
    while len(placed) < n_obstacles:
        attempts += 1
        if attempts > max_attempts:
            raise GenerationError(
                f"could not place {n_obstacles} obstacles of radius {radius} in {max_attempts} attempts"
            )
        x = start[0] + rng.uniform(p.band_near, p.band_far)
        y = rng.uniform(0.0, p.extent)
        ts = rng.uniform(p.ts_min, p.ts_max)
        if math.hypot(x - start[0], y - start[1]) <= radius + vehicle_radius:
            continue
        if any(math.hypot(x - o.x, y - o.y) <= radius + o.radius for o in placed):
            continue
        placed.append(Obstacle(float(x), float(y), float(radius), float(ts)))
    return World(tuple(placed), env, p.extent)


def check_collision(world: World, state: VehicleState) -> tuple:
    if not world.obstacles:
        return False, math.inf
    clearance = min(math.hypot(state.x - o.x, state.y - o.y) - o.radius - state.radius for o in world.obstacles)
    return clearance <= 0.0, clearance


# -- dynamics --------------------------------------------------------------------


def unicycle_step(
    state: VehicleState,
    omega_cmd: float,
    dt: float,
    noise: DynamicsNoise | None = None,
    rng: np.random.Generator | None = None,
    max_yaw_rate: float = math.inf,
    max_yaw_accel: float = math.inf,
) -> VehicleState:
    """Forward-Euler step of x' = V cos(phi), y' = V sin(phi), phi' = omega."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    noise = noise or DynamicsNoise()
    target = min(max(omega_cmd, -max_yaw_rate), max_yaw_rate)
    step = max_yaw_accel * dt
    omega = state.yaw_rate + min(max(target - state.yaw_rate, -step), step)
    speed = state.believed_speed + noise.surge_bias
    yaw = omega + noise.yaw_bias
    if noise.enabled:
        if rng is None:
            raise ValueError("random dynamics noise needs an rng")
        draw = rng.standard_normal(2)
        speed += noise.surge_std * draw[0]
        yaw += noise.yaw_std * draw[1]
    speed = max(speed, 1e-3)
    return dataclasses.replace(
        state,
        x=state.x + speed * math.cos(state.heading) * dt,
        y=state.y + speed * math.sin(state.heading) * dt,
        heading=state.heading + yaw * dt,
        speed=speed,
        yaw_rate=omega,
    )


# -- pings -----------------------------------------------------------------------


def to_vehicle_frame(state: VehicleState, x, y):
    """World points to (forward, starboard) relative to the vehicle."""
    dx = np.asarray(x, dtype=float) - state.x
    dy = np.asarray(y, dtype=float) - state.y
    c, s = math.cos(state.heading), math.sin(state.heading)
    return dx * c + dy * s, dx * s - dy * c


def obstacle_echoes(world: World, state: VehicleState, beams, sonar: SonarParams, env: EnvironmentParams) -> np.ndarray:
    """Linear echo power (n_beams, n_range) from obstacles inside each beam sector."""
    out = np.zeros((len(beams), sonar.n_range))
    if not world.obstacles:
        return out
    ox = np.array([o.x for o in world.obstacles])
    oy = np.array([o.y for o in world.obstacles])
    fwd, stb = to_vehicle_frame(state, ox, oy)
    dist = np.hypot(fwd, stb)
    for k, o in enumerate(world.obstacles):
        near = dist[k] - o.radius
        if near <= 0.0 or near > sonar.max_range:
            continue
        bearing = math.degrees(math.atan2(stb[k], fwd[k]))
        half = math.degrees(math.asin(min(1.0, o.radius / dist[k])))
        lo, hi = bearing - half, bearing + half
        if lo > 180.0 or hi < -180.0:
            continue
        rk = max(near, 1.0)
        i = min(max(int(math.ceil(near / sonar.cell_length)) - 1, 0), sonar.n_range - 1)
        for j, beam in enumerate(beams):
            if hi <= beam.cutoff_low or lo > beam.cutoff_high:
                continue
            angle = min(max(beam.center_angle, lo), hi)
            level = ac.echo_level(o.target_strength, rk, angle, beam, sonar, env)
            out[j, i] += 10.0 ** (level / 10.0)
    return out


def synthesize_ping(
    world: World,
    state: VehicleState,
    beams,
    sonar: SonarParams,
    env: EnvironmentParams,
    rng: np.random.Generator | None = None,
    time: float = 0.0,
    fluctuation: bool = True,
    vertical_width: float = 10.0,
) -> PingSet:
    """Received level per beam and range bin in dB.

    Obstacle echoes, boundary and volume reverberation and noise are summed
    as powers; the total is then scaled by the mean of N unit exponential
    draws, N being the raw resolution cells averaged into one bin.
    """
    beams = tuple(beams)
    floor = floor_level(beams, sonar, env, vertical_width)
    power = 10.0 ** (floor / 10.0) + obstacle_echoes(world, state, beams, sonar, env)
    if fluctuation:
        if rng is None:
            raise ValueError("fluctuation needs an rng")
        looks = number_of_looks(sonar, env)
        power = power * rng.gamma(looks, 1.0 / looks, size=power.shape)
    return PingSet(10.0 * np.log10(power), time)


# -- episodes --------------------------------------------------------------------


def _streams(seed):
    base = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return [np.random.default_rng(np.random.SeedSequence(base + [tag])) for tag in (WORLD_STREAM, DYNAMICS_STREAM, PING_STREAM)]


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


LOG_COLUMNS = (
    "epoch", "x", "y", "phi", "chosen_action",
    "p_collision_0", "p_collision_1", "p_collision_2",
    "risk_0", "risk_1", "risk_2", "p_h1", "collided", "world_hash",
)


def run_episode(
    config: SimConfig,
    seed,
    n_beams: int = 3,
    world: World | None = None,
    map_dump_dir: str | Path | None = None,
    keep_log: bool = False,
) -> EpisodeOutcome:
    """Ping, propagate, update, decide and drive until collision, the far
    edge of the world, or the epoch limit.

    ``seed`` (an int or a tuple of ints) fixes the world, the dynamics noise
    and the ping noise through separate streams, so a one-beam and a
    three-beam run with the same seed share world and dynamics noise.
    """
    world_rng, dyn_rng, ping_rng = _streams(seed)
    ap, mp, dp, wp, vp = config.acoustics, config.occupancy, config.decision, config.world, config.vehicle
    env = ap.environment
    if world is None:
        world = generate_world(world_rng, wp.n_obstacles, wp.obstacle_radius, env, wp, vehicle_radius=vp.radius)
    beams = make_beams(ap, n_beams)
    sonar = effective_sonar(ap)
    tau = sonar.ping_interval
    predicted = predicted_levels(beams, sonar, env, mp.nominal_ts, mp.sigma_z, ap.vertical_width)
    pmap = build_map(sonar, beams, mp.prior)
    geom = pmap.geometry
    actions = dp.actions
    ensemble = action_ensemble(geom, actions, vp.speed, vp.radius) if n_beams > 1 else None
    escapes = escape_ensemble(
        geom, vp.speed, vp.max_yaw_rate, actions.tau, vp.radius, dp.escape_speed_std, dp.escape_samples
    )

    state = VehicleState(
        0.0, world.extent / 2.0, 0.0, max(vp.speed + config.noise.surge_bias, 1e-3), 0.0, vp.speed, vp.radius
    )
    believed_heading = 0.0
    believed_w = 0.0
    substeps = int(round(tau / vp.dt))
    goal_x = world.extent + max((o.radius for o in world.obstacles), default=0.0) + vp.radius
    collided, clearance = check_collision(world, state)
    min_clear = clearance
    path = [(state.x, state.y, state.heading)]
    interventions = 0
    intervening = False
    next_turn = TURN_LEFT
    turn = TURN_LEFT
    released = -math.inf  # time the last single-beam intervention ended
    log = []
    digest = world.digest()
    epoch = 0
    reached = False
    dump = Path(map_dump_dir) if map_dump_dir is not None else None
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)

    while not collided and epoch < vp.max_epochs:
        ping = synthesize_ping(world, state, beams, sonar, env, ping_rng, epoch * tau, ap.fluctuation, ap.vertical_width)
        if epoch > 0:
            belief = VelocityBelief(vp.speed, mp.v_std, believed_w, mp.w_std, mp.nodes)
            pmap = propagate(pmap, belief, tau)
        pmap = bayes_update(pmap, ping, predicted)
        if mp.floor > 0:
            pmap = pmap.with_cells(np.clip(pmap.cells, mp.floor, 1.0 - mp.floor))
        if dump is not None:
            (dump / f"map_{epoch:04d}.txt").write_text(format_map(pmap))

        q = dp.unobserved_occupancy
        if ensemble is not None:
            probs, risks = action_risks(pmap, ensemble, dp.loss, q)
            action = resolve_action(pmap, ensemble, probs, risks, q, dp.tie_break)
            p_h1 = float(probs[action])
            if action != GO_STRAIGHT and not intervening:
                interventions += 1
            intervening = action != GO_STRAIGHT
            omega_cmd = actions.yaw_rates[action]
        else:
            probs = np.array([collision_probability(pmap, escapes, k, q) for k in range(3)])
            p_h1 = float(probs.min())
            table = dp.loss.table()
            risks = np.array([table[0, 0] * (1 - p_h1) + table[0, 1] * p_h1,
                              table[1, 0] * (1 - p_h1) + table[1, 1] * p_h1, np.nan])
            if threshold_decide(p_h1, dp.loss):
                if not intervening:
                    interventions += 1
                    if epoch * tau - released > dp.turn_memory:
                        turn, next_turn = next_turn, (TURN_RIGHT if next_turn == TURN_LEFT else TURN_LEFT)
                    # otherwise the same threat is back: keep turning the same way
                intervening = True
                action = turn
                omega_cmd = vp.max_yaw_rate if action == TURN_LEFT else -vp.max_yaw_rate
            else:
                if intervening:
                    released = epoch * tau
                intervening = False
                action = GO_STRAIGHT
        if action == GO_STRAIGHT:
            err = _wrap(0.0 - believed_heading)
            omega_cmd = min(max(vp.heading_gain * err, -vp.course_rate), vp.course_rate)

        if keep_log:
            pc = list(probs) + [float("nan")] * (3 - len(probs))
            rk = list(risks) + [float("nan")] * (3 - len(risks))
            log.append([epoch, state.x, state.y, state.heading, action, *pc[:3], *rk[:3], p_h1, 0, digest])

        heading_before = believed_heading
        believed_omega = state.yaw_rate
        for _ in range(substeps):
            state = unicycle_step(state, omega_cmd, vp.dt, config.noise, dyn_rng, vp.max_yaw_rate, vp.max_yaw_accel)
            step = vp.max_yaw_accel * vp.dt
            target = min(max(omega_cmd, -vp.max_yaw_rate), vp.max_yaw_rate)
            believed_omega += min(max(target - believed_omega, -step), step)
            believed_heading += believed_omega * vp.dt
            path.append((state.x, state.y, state.heading))
            collided, clearance = check_collision(world, state)
            min_clear = min(min_clear, clearance)
            if collided:
                break
            if state.x >= goal_x:
                reached = True
                break
        believed_w = (believed_heading - heading_before) / tau
        epoch += 1
        if keep_log and collided:
            log[-1][12] = 1
        if reached:
            break

    return EpisodeOutcome(
        collided=collided,
        min_clearance=min_clear,
        path=np.array(path),
        interventions=interventions,
        epochs=epoch,
        reached_goal=reached,
        world_hash=digest,
        log=log,
    )


def write_episode_log(path: str | Path, outcome: EpisodeOutcome):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in outcome.log:
            w.writerow(row)
