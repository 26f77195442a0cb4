"""Vehicle-frame polar occupancy map.

Cells are indexed ``(i, j)`` with ``i`` the 0-based range ring covering radii
``(i*l_c, (i+1)*l_c]`` and ``j`` the beam sector covering bearings
``(edges[j], edges[j+1]]`` in degrees, positive to starboard. The vehicle
frame has x forward and y to starboard.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acoustics import BeamSpec, SonarParams
from .errors import ConfigurationError, DimensionError

OCCUPIED = 1
EMPTY = 0


@dataclass(frozen=True)
class MapGeometry:
    n_range: int
    cell_length: float
    beam_edges: tuple  # degrees, strictly increasing

    @property
    def n_beams(self) -> int:
        return len(self.beam_edges) - 1

    @property
    def shape(self) -> tuple:
        return (self.n_range, self.n_beams)

    @property
    def max_range(self) -> float:
        return self.n_range * self.cell_length

    def cell_area(self, i: int, j: int) -> float:
        r0, r1 = i * self.cell_length, (i + 1) * self.cell_length
        width = math.radians(self.beam_edges[j + 1] - self.beam_edges[j])
        return 0.5 * (r1 * r1 - r0 * r0) * width

    def locate(self, forward, starboard):
        """Cell indices of vehicle-frame points; -1 where outside the map."""
        forward = np.asarray(forward, dtype=float)
        starboard = np.asarray(starboard, dtype=float)
        rng = np.hypot(forward, starboard)
        bearing = np.degrees(np.arctan2(starboard, forward))
        ring = np.ceil(rng / self.cell_length).astype(int) - 1
        ring = np.where(rng == 0.0, 0, ring)
        edges = np.asarray(self.beam_edges)
        beam = np.searchsorted(edges, bearing, side="left") - 1
        inside = (ring < self.n_range) & (bearing > edges[0]) & (bearing <= edges[-1])
        return np.where(inside, ring, -1), np.where(inside, beam, -1)


@dataclass(frozen=True)
class PolarMap:
    geometry: MapGeometry
    cells: np.ndarray  # (n_range, n_beams) occupancy probabilities
    prior: float

    @property
    def n_range(self) -> int:
        return self.geometry.n_range

    @property
    def n_beams(self) -> int:
        return self.geometry.n_beams

    @property
    def cell_length(self) -> float:
        return self.geometry.cell_length

    @property
    def beam_edges(self) -> tuple:
        return self.geometry.beam_edges

    def with_cells(self, cells: np.ndarray) -> "PolarMap":
        return dataclasses.replace(self, cells=cells)


@dataclass(frozen=True)
class PingSet:
    traces: np.ndarray  # (n_beams, n_range) received level in dB
    time: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.traces)):
            raise ValueError("ping traces must be finite")


@dataclass(frozen=True)
class PredictedLevels:
    """Expected received level per cell under each hypothesis (dB)."""

    occupied: np.ndarray  # (n_range, n_beams)
    empty: np.ndarray
    sigma: float = 3.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigurationError(f"measurement sigma must be positive, got {self.sigma}")
        if not (np.all(np.isfinite(self.occupied)) and np.all(np.isfinite(self.empty))):
            raise ValueError("predicted levels must be finite")


@dataclass(frozen=True)
class VelocityBelief:
    v_mean: float = 0.0  # m/s, forward
    v_std: float = 0.0
    w_mean: float = 0.0  # rad/s, positive turns to port
    w_std: float = 0.0
    nodes: int = 5

    def __post_init__(self):
        if self.v_std < 0 or self.w_std < 0:
            raise ConfigurationError("velocity standard deviations must be nonnegative")
        if self.nodes < 1 or self.nodes % 2 == 0:
            raise ConfigurationError(f"quadrature node count must be odd and >= 1, got {self.nodes}")


def geometry_for(sonar: SonarParams, beams: Sequence[BeamSpec]) -> MapGeometry:
    if not beams:
        raise ConfigurationError("at least one beam is required")
    for a, b in zip(beams, beams[1:]):
        if b.cutoff_low < a.cutoff_high:
            raise ConfigurationError(
                f"beam sectors overlap: ({a.cutoff_low}, {a.cutoff_high}] and ({b.cutoff_low}, {b.cutoff_high}]"
            )
        if b.cutoff_low > a.cutoff_high:
            raise ConfigurationError(
                f"beam sectors are not contiguous: gap between {a.cutoff_high} and {b.cutoff_low}"
            )
    edges = tuple(float(b.cutoff_low) for b in beams) + (float(beams[-1].cutoff_high),)
    return MapGeometry(sonar.n_range, float(sonar.cell_length), edges)


def build_map(sonar: SonarParams, beams: Sequence[BeamSpec], prior: float = 0.5) -> PolarMap:
    if not 0.0 < prior < 1.0:
        raise ConfigurationError(f"prior must be in (0, 1), got {prior}")
    geom = geometry_for(sonar, beams)
    return PolarMap(geom, np.full(geom.shape, float(prior)), float(prior))


# -- translational overlap ---------------------------------------------------


def _theta_breaks(geom: MapGeometry, r0: float, r1: float, lo: float, hi: float, shift: float):
    """Bearings in (lo, hi) where the set of source cells seen along a ray changes."""
    lc = geom.cell_length
    out = [lo, hi]
    radii = [r for r in (r0, r1) if r > 0.0]
    kmin = max(int(math.floor((r0 - abs(shift)) / lc)), 1)
    kmax = int(math.ceil((r1 + abs(shift)) / lc))
    for edge in geom.beam_edges:
        psi = math.radians(edge)
        for rad in radii:
            x = shift * math.sin(psi) / rad
            if abs(x) <= 1.0:
                out.append(psi + math.asin(x))
        for k in range(kmin, kmax + 1):
            qx, qy = k * lc * math.cos(psi) - shift, k * lc * math.sin(psi)
            if r0 <= math.hypot(qx, qy) <= r1:
                out.append(math.atan2(qy, qx))
    for rad in radii:
        for k in range(kmin, kmax + 1):
            x = ((k * lc) ** 2 - rad * rad - shift * shift) / (2.0 * rad * shift)
            if abs(x) <= 1.0:
                t = math.acos(x)
                out.extend((t, -t))
    out = np.unique(np.clip(out, lo, hi))
    return out


def _translation_row(geom: MapGeometry, i: int, j: int, shift: float, n_theta: int):
    """Fractions of target cell (i, j) whose pre-shift location lies in each
    source cell, plus the fraction that came from outside the map.

    The radial integral of r dr is exact between the radii where the shifted
    point crosses a ring or sector edge; the bearing integral is split where
    that crossing pattern changes and uses Gauss-Legendre on each piece.
    """
    lc = geom.cell_length
    r0, r1 = i * lc, (i + 1) * lc
    lo, hi = math.radians(geom.beam_edges[j]), math.radians(geom.beam_edges[j + 1])
    area = 0.5 * (r1 * r1 - r0 * r0) * (hi - lo)
    nb = geom.n_beams
    row = np.zeros(geom.n_range * nb)
    if shift == 0.0:
        row[i * nb + j] = 1.0
        return row, 0.0

    breaks = _theta_breaks(geom, r0, r1, lo, hi, shift)
    x, w = np.polynomial.legendre.leggauss(n_theta)
    a_, b_ = breaks[:-1, None], breaks[1:, None]
    theta = (0.5 * (b_ - a_) * x[None, :] + 0.5 * (a_ + b_)).ravel()
    dtheta = (0.5 * (b_ - a_) * w[None, :]).ravel()
    c, s = np.cos(theta), np.sin(theta)
    n = len(theta)

    cands = [np.full(n, r0), np.full(n, r1)]
    kmin = max(int(math.floor((r0 - abs(shift)) / lc)), 1)
    kmax = int(math.ceil((r1 + abs(shift)) / lc))
    for k in range(kmin, kmax + 1):
        # |p + shift| = k*lc
        disc = (k * lc) ** 2 - (shift * s) ** 2
        root = np.sqrt(np.where(disc >= 0, disc, np.nan))
        cands.append(-shift * c + root)
        cands.append(-shift * c - root)
    for edge in geom.beam_edges:
        # bearing of p + shift equals an edge
        psi = math.radians(edge)
        den = np.sin(theta - psi)
        with np.errstate(divide="ignore", invalid="ignore"):
            cands.append(np.where(den != 0, shift * math.sin(psi) / den, np.nan))
    pts = np.stack(cands, axis=1)
    pts = np.where(np.isfinite(pts), pts, r0)
    pts = np.sort(np.clip(pts, r0, r1), axis=1)
    a, b = pts[:, :-1], pts[:, 1:]
    mid = 0.5 * (a + b)
    ring, beam = geom.locate(mid * c[:, None] + shift, mid * s[:, None])
    weight = 0.5 * (b * b - a * a) * dtheta[:, None]

    inside = ring >= 0
    np.add.at(row, (ring * nb + beam)[inside], weight[inside])
    outside = weight[~inside].sum()
    return row / area, outside / area


@functools.lru_cache(maxsize=256)
def translation_matrix(geom: MapGeometry, shift: float, n_theta: int = 8):
    """Overlap ratios for a forward displacement ``shift`` (m).

    Returns ``(M, out)`` where ``M[target, source]`` is the fraction of the
    target cell that was in the source cell before the move and ``out[target]``
    the fraction that came from outside the mapped region. Cells are
    flattened row-major from ``(i, j)``.
    """
    n = geom.n_range * geom.n_beams
    mat = np.zeros((n, n))
    out = np.zeros(n)
    for i in range(geom.n_range):
        for j in range(geom.n_beams):
            t = i * geom.n_beams + j
            mat[t], out[t] = _translation_row(geom, i, j, float(shift), n_theta)
    mat.setflags(write=False)
    out.setflags(write=False)
    return mat, out


def overlap_area_translation(
    target, source, v_x: float, tau: float, geometry: MapGeometry, n_theta: int = 8
) -> float:
    """A(target, source shifted toward the vehicle by v_x*tau) / A(target)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    i, j = target
    m, n = source
    shift = v_x * tau
    if shift == 0.0:
        return 1.0 if (i, j) == (m, n) else 0.0
    row, _ = _translation_row(geometry, i, j, shift, n_theta)
    return float(row[m * geometry.n_beams + n])


# -- rotational overlap ------------------------------------------------------


def _interval_overlap(a0, a1, b0, b1):
    return np.clip(np.minimum(a1, b1) - np.maximum(a0, b0), 0.0, None)


def rotation_matrix(geom: MapGeometry, rotation_deg: float):
    """Per-ring angular transfer for a bearing shift of ``rotation_deg``.

    ``R[j, n]`` is the overlap of source sector n, shifted, with target
    sector j divided by the shifted sector's width. ``uncovered[j]`` is the
    fraction of target j not covered by any shifted source sector.
    """
    edges = np.asarray(geom.beam_edges)
    lo, hi = edges[:-1], edges[1:]
    ov = _interval_overlap(lo[:, None], hi[:, None], lo[None, :] + rotation_deg, hi[None, :] + rotation_deg)
    ratio = ov / (hi - lo)[None, :]
    uncovered = 1.0 - ov.sum(axis=1) / (hi - lo)
    return ratio, np.clip(uncovered, 0.0, 1.0)


def overlap_area_rotation(target, source, omega: float, tau: float, geometry: MapGeometry) -> float:
    """(beta - alpha) / gamma for cells in the same ring, else 0."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    i, j = target
    m, n = source
    if i != m:
        return 0.0
    ratio, _ = rotation_matrix(geometry, math.degrees(omega * tau))
    return float(ratio[j, n])


# -- propagation -------------------------------------------------------------


def _gauss_hermite(mean: float, std: float, nodes: int):
    if std == 0.0:
        return np.array([mean]), np.array([1.0])
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return mean + std * x, w / w.sum()


def propagate(pmap: PolarMap, belief: VelocityBelief, tau: float) -> PolarMap:
    """Move the map through one ping interval: translation, then rotation.

    Inflow from outside the mapped region is refilled with the map prior.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    geom = pmap.geometry
    cells = pmap.cells

    v_nodes, v_w = _gauss_hermite(belief.v_mean, belief.v_std, belief.nodes)
    if not (len(v_nodes) == 1 and v_nodes[0] * tau == 0.0):
        flat = cells.reshape(-1)
        new = np.zeros_like(flat)
        for v, w in zip(v_nodes, v_w):
            mat, out = translation_matrix(geom, float(v * tau))
            new += w * (mat @ flat + pmap.prior * out)
        cells = np.clip(new, 0.0, 1.0).reshape(geom.shape)

    w_nodes, w_w = _gauss_hermite(belief.w_mean, belief.w_std, belief.nodes)
    if not (len(w_nodes) == 1 and w_nodes[0] * tau == 0.0):
        new = np.zeros_like(cells)
        for om, w in zip(w_nodes, w_w):
            ratio, uncovered = rotation_matrix(geom, math.degrees(om * tau))
            new += w * (cells @ ratio.T + pmap.prior * uncovered[None, :])
        cells = np.clip(new, 0.0, 1.0)

    if cells is pmap.cells:
        cells = cells.copy()
    return pmap.with_cells(cells)


# -- measurement update ------------------------------------------------------


def _log_gaussian(x, mean, sigma):
    z = (x - mean) / sigma
    return -0.5 * z * z - math.log(sigma * math.sqrt(2.0 * math.pi))


def measurement_likelihood(trace_value: float, cell, hypothesis: int, predicted: PredictedLevels) -> float:
    """Gaussian density (in dB) of one bin's received level."""
    i, j = cell
    mean = predicted.occupied[i, j] if hypothesis == OCCUPIED else predicted.empty[i, j]
    return float(math.exp(_log_gaussian(trace_value, mean, predicted.sigma)))


def bayes_update(pmap: PolarMap, ping: PingSet, predicted: PredictedLevels) -> PolarMap:
    """Per-cell posterior given one ping; beam j's trace updates column j."""
    shape = pmap.geometry.shape
    if ping.traces.shape != (shape[1], shape[0]):
        raise DimensionError(f"ping shape {ping.traces.shape} does not match map (beams, ranges) {shape[::-1]}")
    if predicted.occupied.shape != shape or predicted.empty.shape != shape:
        raise DimensionError("predicted levels do not match the map geometry")
    z = ping.traces.T
    l1 = _log_gaussian(z, predicted.occupied, predicted.sigma)
    l0 = _log_gaussian(z, predicted.empty, predicted.sigma)
    top = np.maximum(l1, l0)
    a = np.exp(l1 - top)
    b = np.exp(l0 - top)
    p = pmap.cells
    num = p * a
    den = num + (1.0 - p) * b
    # den is 0 only at an absorbing 0/1 cell whose supporting likelihood underflowed
    safe = (l1 != l0) & (den > 0.0)
    post = np.where(safe, np.clip(num / np.where(safe, den, 1.0), 0.0, 1.0), p)
    return pmap.with_cells(post)


def format_map(pmap: PolarMap) -> str:
    """Text matrix: one row per range ring, one column per beam."""
    return "\n".join(" ".join(f"{p:.6f}" for p in row) for row in pmap.cells) + "\n"
