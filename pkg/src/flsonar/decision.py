"""Decision-theoretic avoidance: threshold rule, multi-action expected loss,
and collision probability over sampled vehicle trajectories.

Actions are yaw-rate commands. Yaw rates are positive for turns to port
(counter-clockwise seen from above), matching a standard heading angle.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import ConfigurationError, DimensionError
from .occupancy import MapGeometry, PolarMap

GO_STRAIGHT, TURN_LEFT, TURN_RIGHT = 0, 1, 2


@dataclass(frozen=True)
class LossModel:
    # two-action table, C[assumed][true]
    c00: float = 0.0
    c01: float = 100.0
    c10: float = 1.0
    c11: float = 0.0
    # multi-action: per-action deviation cost and shared collision cost
    deviation: tuple = (0.0, 1.0, 1.0)
    collision: float = 100.0
    # risk of hitting something unseen while intervening, folded into C10/C11
    intervention_prior: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "deviation", tuple(float(c) for c in self.deviation))
        if not self.c01 > self.c11 + self.intervention_prior:
            raise ConfigurationError("loss: C01 must exceed C11")
        if not self.c10 > self.c00:
            raise ConfigurationError("loss: C10 must exceed C00")
        if not self.deviation:
            raise ConfigurationError("loss: at least one deviation cost is required")
        if not self.collision > max(self.deviation):
            raise ConfigurationError("loss: collision cost must exceed every deviation cost")

    def table(self) -> np.ndarray:
        """2x2 array of L(H_i, H_j) including the intervention prior."""
        x = self.intervention_prior
        return np.array([[self.c00, self.c01], [self.c10 + x, self.c11 + x]])


@dataclass(frozen=True)
class ActionModel:
    yaw_rates: tuple = (0.0, 0.15, -0.15)  # rad/s for a^0 .. a^K
    tau: float = 3.5  # threat assessment interval, s
    horizon: float = 10.0  # trajectory horizon T, s
    yaw_std: float = 0.02  # rad/s
    speed_std: float = 0.1  # m/s
    samples: int = 15

    def __post_init__(self):
        object.__setattr__(self, "yaw_rates", tuple(float(w) for w in self.yaw_rates))
        if not self.yaw_rates or self.yaw_rates[0] != 0.0:
            raise ConfigurationError("action a^0 must be 'go straight' (zero yaw rate)")
        if not self.horizon >= self.tau > 0:
            raise ConfigurationError(f"need horizon >= tau > 0, got T={self.horizon}, tau={self.tau}")
        if self.samples < 1:
            raise ConfigurationError("trajectory sample count must be >= 1")
        if self.yaw_std < 0 or self.speed_std < 0:
            raise ConfigurationError("trajectory dispersion must be nonnegative")

    @property
    def n_actions(self) -> int:
        return len(self.yaw_rates)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Sampled trajectories per action and what they imply for the map.

    ``crossing[k]`` holds p(c_ij in X | a^k) for every cell; ``exit[k]`` is
    the probability that the path leaves the mapped region within the horizon.
    """

    geometry: MapGeometry
    paths: tuple = field(repr=False)  # per action: list of (n_steps, 2) arrays
    weights: tuple = field(repr=False)  # per action: (n_samples,) summing to 1
    crossing: np.ndarray = field(repr=False)  # (n_actions, n_range, n_beams)
    exit: np.ndarray = field(repr=False)  # (n_actions,)

    @property
    def n_actions(self) -> int:
        return len(self.paths)


# -- risk and decision rules -------------------------------------------------


def posterior_risk(action: int, p_h1: float, loss: LossModel) -> float:
    """R(a^k) = C_0^k (1 - p) + (C_0^k + C_1) p."""
    c0 = loss.deviation[action]
    return c0 * (1.0 - p_h1) + (c0 + loss.collision) * p_h1


def two_action_risk(assumed: int, p_h1: float, loss: LossModel) -> float:
    """R(H_i) = C_{i,0} P(H_0) + C_{i,1} P(H_1)."""
    row = loss.table()[assumed]
    return row[0] * (1.0 - p_h1) + row[1] * p_h1


def threshold_decide(p_h1: float, loss: LossModel) -> bool:
    """True (intervene) iff P(H1)/P(H0) exceeds (C10 - C00)/(C01 - C11)."""
    table = loss.table()
    return p_h1 * (table[0, 1] - table[1, 1]) > (1.0 - p_h1) * (table[1, 0] - table[0, 0])


# -- trajectories ------------------------------------------------------------


def _stratified_normal(n: int, stride: int = 1) -> np.ndarray:
    """n standard-normal quantiles at stratum midpoints, permuted by ``stride``."""
    k = (np.arange(n) * stride) % n
    return norm.ppf((k + 0.5) / n)


def _coprime_stride(n: int) -> int:
    for s in (7, 5, 3, 11, 13, 2):
        if math.gcd(s, n) == 1 and s < n:
            return s
    return 1


def arc(speed: float, yaw_rate: float, duration: float, step: float) -> np.ndarray:
    """Vehicle-frame (forward, starboard) positions along a constant-rate arc."""
    n = max(int(math.ceil(speed * duration / step)), 1) if duration > 0 else 0
    t = np.linspace(0.0, duration, n + 1)
    if yaw_rate == 0.0:
        fwd, left = speed * t, np.zeros_like(t)
    else:
        rad = speed / yaw_rate
        fwd = rad * np.sin(yaw_rate * t)
        left = rad * (1.0 - np.cos(yaw_rate * t))
    return np.column_stack([fwd, -left])


def _disc_offsets(radius: float, spacing: float) -> np.ndarray:
    """Points filling a disc: a square lattice clipped to the disc plus its rim."""
    n = max(int(math.ceil(radius / spacing)), 1)
    g = np.linspace(-radius, radius, 2 * n + 1)
    xx, yy = np.meshgrid(g, g)
    keep = xx**2 + yy**2 <= radius**2
    rim_n = max(int(math.ceil(2 * math.pi * radius / spacing)), 8)
    ang = np.linspace(0, 2 * math.pi, rim_n, endpoint=False)
    rim = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([np.column_stack([xx[keep], yy[keep]]), rim])


def swept_cells(geom: MapGeometry, path: np.ndarray, vehicle_radius: float) -> tuple:
    """Boolean (n_range, n_beams) mask of cells touched by the swept vehicle
    disc, and whether the path centre leaves the mapped region."""
    spacing = min(geom.cell_length, max(vehicle_radius, 1e-3)) / 4.0
    offs = _disc_offsets(vehicle_radius, spacing) if vehicle_radius > 0 else np.zeros((1, 2))
    pts = (path[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    ring, beam = geom.locate(pts[:, 0], pts[:, 1])
    mask = np.zeros(geom.shape, dtype=bool)
    ok = ring >= 0
    mask[ring[ok], beam[ok]] = True
    cring, _ = geom.locate(path[1:, 0], path[1:, 1])
    exited = bool(np.any(cring < 0))
    return mask, exited


def build_ensemble(
    geom: MapGeometry,
    speed: float,
    yaw_rates,
    horizon: float,
    yaw_std: float = 0.0,
    speed_std: float = 0.0,
    samples: int = 1,
    vehicle_radius: float = 0.5,
) -> TrajectoryEnsemble:
    """Sample trajectories for each commanded yaw rate with stratified
    Gaussian dispersion in yaw rate and speed."""
    zy = _stratified_normal(samples)
    zv = _stratified_normal(samples, _coprime_stride(samples))
    if samples == 1:
        zy = zv = np.zeros(1)
    step = min(geom.cell_length, max(vehicle_radius, 1e-3)) / 2.0
    paths, weights, crossing, exits = [], [], [], []
    for w0 in yaw_rates:
        plist = []
        acc = np.zeros(geom.shape)
        ex = 0.0
        wts = np.full(samples, 1.0 / samples)
        for k in range(samples):
            v = max(speed + speed_std * zv[k], 0.0)
            p = arc(v, w0 + yaw_std * zy[k], horizon, step)
            mask, exited = swept_cells(geom, p, vehicle_radius)
            acc += wts[k] * mask
            ex += wts[k] * exited
            plist.append(p)
        paths.append(plist)
        weights.append(wts)
        crossing.append(acc)
        exits.append(ex)
    crossing = np.clip(np.array(crossing), 0.0, 1.0)
    return TrajectoryEnsemble(geom, tuple(paths), tuple(weights), crossing, np.clip(np.array(exits), 0.0, 1.0))


@functools.lru_cache(maxsize=64)
def _cached_ensemble(geom, speed, yaw_rates, horizon, yaw_std, speed_std, samples, vehicle_radius):
    return build_ensemble(geom, speed, yaw_rates, horizon, yaw_std, speed_std, samples, vehicle_radius)


def action_ensemble(geom: MapGeometry, actions: ActionModel, speed: float, vehicle_radius: float) -> TrajectoryEnsemble:
    return _cached_ensemble(
        geom, float(speed), actions.yaw_rates, actions.horizon, actions.yaw_std,
        actions.speed_std, actions.samples, float(vehicle_radius),
    )


def escape_ensemble(
    geom: MapGeometry,
    speed: float,
    max_yaw_rate: float,
    tau: float,
    vehicle_radius: float,
    speed_std: float = 0.0,
    samples: int = 1,
):
    """Straight, hard-left and hard-right arcs over ``tau``, optionally
    dispersed over an uncertain surge speed."""
    if speed_std == 0.0:
        samples = 1
    return _cached_ensemble(
        geom, float(speed), (0.0, float(max_yaw_rate), -float(max_yaw_rate)), float(tau), 0.0,
        float(speed_std), int(samples), float(vehicle_radius),
    )


def trajectory_cell_probability(ensemble: TrajectoryEnsemble, action: int, cell) -> float:
    i, j = cell
    return float(ensemble.crossing[action, i, j])


def collision_probability(
    pmap: PolarMap, ensemble: TrajectoryEnsemble, action: int, unobserved_occupancy: float = 0.0
) -> float:
    """sum_ij p(c_ij = 1) p(X in c_ij | a^k), clamped to [0, 1].

    ``unobserved_occupancy`` charges paths that leave the sensed region with
    that occupancy for the unseen space they enter.
    """
    if pmap.geometry != ensemble.geometry:
        raise DimensionError("map and trajectory ensemble geometries differ")
    p = float(np.sum(pmap.cells * ensemble.crossing[action]))
    p += unobserved_occupancy * float(ensemble.exit[action])
    return min(max(p, 0.0), 1.0)


def action_risks(pmap: PolarMap, ensemble: TrajectoryEnsemble, loss: LossModel, unobserved_occupancy: float = 0.0):
    p = np.array(
        [collision_probability(pmap, ensemble, k, unobserved_occupancy) for k in range(ensemble.n_actions)]
    )
    risks = np.array([posterior_risk(k, p[k], loss) for k in range(ensemble.n_actions)])
    return p, risks


def path_exposure(pmap: PolarMap, ensemble: TrajectoryEnsemble, action: int, unobserved_occupancy: float = 0.0) -> float:
    """Expected number of occupied cells crossed, i.e. the collision sum
    before clamping. Separates actions whose probabilities saturate at 1."""
    if pmap.geometry != ensemble.geometry:
        raise DimensionError("map and trajectory ensemble geometries differ")
    return float(np.sum(pmap.cells * ensemble.crossing[action])) + unobserved_occupancy * float(ensemble.exit[action])


def select_action(
    pmap: PolarMap,
    ensemble: TrajectoryEnsemble,
    loss: LossModel,
    unobserved_occupancy: float = 0.0,
    tie_break: str = "index",
) -> int:
    """argmin_k R(a^k); exact ties go to the lowest index (a^0 first).

    With ``tie_break="exposure"``, tied actions, or every action once all
    collision probabilities have saturated at 1, are ranked by path
    exposure instead, so a boxed-in vehicle heads for the thinnest
    occupancy rather than straight on.
    """
    if ensemble.n_actions < 2:
        raise ConfigurationError("need at least two actions")
    if len(loss.deviation) < ensemble.n_actions:
        raise ConfigurationError("loss model has fewer deviation costs than actions")
    if tie_break not in ("index", "exposure"):
        raise ConfigurationError(f"tie_break must be 'index' or 'exposure', got {tie_break!r}")
    probs, risks = action_risks(pmap, ensemble, loss, unobserved_occupancy)
    return resolve_action(pmap, ensemble, probs, risks, unobserved_occupancy, tie_break)


def resolve_action(pmap, ensemble, probs, risks, unobserved_occupancy=0.0, tie_break="index") -> int:
    """Index of the chosen action given precomputed probabilities and risks."""
    best = int(np.argmin(risks))
    if tie_break == "index":
        return best
    if np.all(probs >= 1.0):
        candidates = np.arange(len(risks))
    else:
        candidates = np.flatnonzero(risks == risks[best])
    if len(candidates) == 1:
        return best
    exposure = [path_exposure(pmap, ensemble, int(k), unobserved_occupancy) for k in candidates]
    return int(candidates[int(np.argmin(exposure))])


def unavoidable_collision_probability(
    pmap: PolarMap,
    speed: float,
    max_yaw_rate: float,
    tau: float,
    vehicle_radius: float = 0.5,
    unobserved_occupancy: float = 0.0,
    speed_std: float = 0.0,
    samples: int = 1,
) -> float:
    """P(C_U = 1): the straight path collides within ``tau`` and so do both
    maximum-rate escape arcs, bounded by the least of the three."""
    if max_yaw_rate <= 0:
        raise ConfigurationError("maximum yaw rate must be positive")
    ens = escape_ensemble(pmap.geometry, speed, max_yaw_rate, tau, vehicle_radius, speed_std, samples)
    probs = [collision_probability(pmap, ens, k, unobserved_occupancy) for k in range(3)]
    return min(probs)
