"""Closed-form underwater acoustics used to synthesize sonar returns.

Formula set:

* sound speed: Medwin (1975)
* absorption: Schulkin & Marsh MgSO4/pure-water terms (temperature and
  depth dependent) plus Thorp's boric-acid relaxation
* spreading: spherical, 20 log10 r
* beam patterns: discrete element sum of single point sources
* backscatter: Lambert (seafloor), Chapman & Harris (surface), constant
  volume scattering strength
* ambient noise: Coates/Wenz turbulence, shipping, wind and thermal spectra

All levels are in dB; power sums are done in the linear domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError

KNOT = 0.514444  # m/s

# Wind speed (knots) associated with sea states 0..6.
SEA_STATE_WIND_KNOTS = (0.0, 4.5, 8.5, 13.5, 19.0, 24.5, 37.0)

LAMBERT_MU_DB = -27.0
VOLUME_SCATTERING_DB = -70.0


@dataclass(frozen=True)
class EnvironmentParams:
    temperature: float = 10.0  # degC
    salinity: float = 35.0  # ppt
    sonar_depth: float = 50.0  # m below the surface
    seafloor_depth: float = 75.0  # m, total water column
    sea_state: int = 2
    shipping_level: float = 0.5
    lambert_mu: float = LAMBERT_MU_DB
    volume_scattering: float = VOLUME_SCATTERING_DB

    def __post_init__(self):
        if not 0.0 < self.sonar_depth < self.seafloor_depth:
            raise ConfigurationError(
                f"sonar_depth must lie in (0, seafloor_depth={self.seafloor_depth}), "
                f"got {self.sonar_depth}"
            )
        if int(self.sea_state) != self.sea_state or not 0 <= self.sea_state <= 6:
            raise ConfigurationError(f"sea_state must be an integer in [0, 6], got {self.sea_state}")
        if not 0.0 <= self.shipping_level <= 1.0:
            raise ConfigurationError(f"shipping_level must be in [0, 1], got {self.shipping_level}")

    @property
    def altitude(self) -> float:
        """Height of the sonar above the seafloor (m)."""
        return self.seafloor_depth - self.sonar_depth

    @property
    def wind_speed_knots(self) -> float:
        return SEA_STATE_WIND_KNOTS[int(self.sea_state)]


@dataclass(frozen=True)
class SonarParams:
    frequency: float = 675.0  # kHz
    source_level: float = 205.0  # dB re 1 uPa @ 1 m
    pulse_length: float = 100e-6  # s
    cell_length: float = 0.5  # m, radial map resolution
    max_range: float = 50.0  # m
    ping_interval: float = 1.0  # s

    def __post_init__(self):
        if self.frequency <= 0:
            raise ConfigurationError(f"frequency must be positive, got {self.frequency}")
        if self.pulse_length <= 0:
            raise ConfigurationError(f"pulse_length must be positive, got {self.pulse_length}")
        if self.cell_length <= 0:
            raise ConfigurationError(f"cell_length must be positive, got {self.cell_length}")
        if self.ping_interval <= 0:
            raise ConfigurationError(f"ping_interval must be positive, got {self.ping_interval}")
        ratio = self.max_range / self.cell_length
        if self.max_range <= 0 or abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigurationError(
                f"max_range ({self.max_range}) must be a positive integer multiple "
                f"of cell_length ({self.cell_length})"
            )

    @property
    def n_range(self) -> int:
        return int(round(self.max_range / self.cell_length))

    @property
    def bandwidth(self) -> float:
        """Receiver bandwidth in Hz, matched to the pulse."""
        return 1.0 / self.pulse_length


@dataclass(frozen=True)
class BeamSpec:
    """One transducer beam.

    ``element_positions`` are (horizontal, vertical) offsets on the
    transducer face in wavelengths. Angles are bearings in degrees,
    positive to starboard.
    """

    center_angle: float
    element_positions: tuple = field(default=())
    cutoff_low: float = -5.0
    cutoff_high: float = 5.0

    def __post_init__(self):
        object.__setattr__(
            self, "element_positions", tuple((float(h), float(v)) for h, v in self.element_positions)
        )
        if not self.cutoff_low < self.center_angle < self.cutoff_high:
            raise ConfigurationError(
                f"beam center {self.center_angle} must lie strictly between cutoffs "
                f"{self.cutoff_low} and {self.cutoff_high}"
            )

    @property
    def width(self) -> float:
        return self.cutoff_high - self.cutoff_low


def _check_env_domain(env: EnvironmentParams):
    if not -4.0 <= env.temperature <= 40.0:
        raise DomainError(f"temperature {env.temperature} degC outside [-4, 40]")
    if not 0.0 <= env.salinity <= 45.0:
        raise DomainError(f"salinity {env.salinity} ppt outside [0, 45]")


def sound_speed(env: EnvironmentParams) -> float:
    """Medwin (1975) sound speed in m/s at the sonar depth."""
    _check_env_domain(env)
    t, s, z = env.temperature, env.salinity, env.sonar_depth
    return (
        1449.2
        + 4.6 * t
        - 0.055 * t**2
        + 0.00029 * t**3
        + (1.34 - 0.010 * t) * (s - 35.0)
        + 0.016 * z
    )


def absorption_coeff(frequency: float, env: EnvironmentParams) -> float:
    """Absorption in dB/km for ``frequency`` in kHz."""
    if frequency <= 0:
        raise DomainError(f"frequency must be positive, got {frequency}")
    _check_env_domain(env)
    f2 = frequency * frequency
    # MgSO4 relaxation frequency (kHz)
    f_t = 21.9 * 10.0 ** (6.0 - 1520.0 / (env.temperature + 273.0))
    pressure = env.sonar_depth / 10.0  # kg/cm^2, ~1 atm per 10 m
    magnesium_and_water = (
        8.68e3
        * (env.salinity * 2.34e-6 * f_t * f2 / (f_t * f_t + f2) + 3.38e-6 * f2 / f_t)
        * (1.0 - 6.54e-4 * pressure)
    )
    boric = 0.11 * f2 / (1.0 + f2)
    return boric + magnesium_and_water + 0.003


def transmission_loss(range_m: float, frequency: float, env: EnvironmentParams) -> float:
    """One-way spherical spreading plus absorption, dB."""
    if range_m < 1.0:
        raise DomainError(f"range {range_m} m is inside the 1 m reference distance")
    return 20.0 * math.log10(range_m) + absorption_coeff(frequency, env) * range_m / 1000.0


def pattern_amplitude(beam: BeamSpec, off_axis, elevation=0.0):
    """Normalized |sum of element phasors| for angles (deg) relative to the beam axis."""
    if not beam.element_positions:
        raise ConfigurationError("beam has no elements")
    pos = np.asarray(beam.element_positions, dtype=float)
    az = np.radians(np.asarray(off_axis, dtype=float))
    el = np.radians(np.asarray(elevation, dtype=float))
    u = np.sin(az) * np.cos(el)
    w = np.sin(el)
    phase = 2.0 * np.pi * (
        np.multiply.outer(u, pos[:, 0]) + np.multiply.outer(np.broadcast_to(w, u.shape), pos[:, 1])
    )
    total = np.exp(1j * phase).sum(axis=-1)
    return np.abs(total) / len(pos)


def beam_pattern_loss(beam: BeamSpec, angle: float, elevation: float = 0.0) -> float:
    """One-way pattern loss in dB at bearing ``angle`` (deg); 0 dB on the beam axis."""
    if not -180.0 <= angle <= 180.0:
        raise DomainError(f"angle {angle} outside [-180, 180]")
    amp = float(pattern_amplitude(beam, angle - beam.center_angle, elevation))
    return -20.0 * math.log10(max(amp, 1e-10))


def line_array(n: int, spacing: float) -> np.ndarray:
    """Offsets of ``n`` equally spaced elements centred on zero."""
    return (np.arange(n) - (n - 1) / 2.0) * spacing


def planar_array(n_h: int, spacing_h: float, n_v: int, spacing_v: float) -> tuple:
    """Rectangular grid of (horizontal, vertical) element offsets in wavelengths."""
    h = line_array(n_h, spacing_h)
    v = line_array(n_v, spacing_v)
    return tuple((float(a), float(b)) for a in h for b in v)


def calibrate_spacing(n: int, half_width: float, loss_db: float = 5.0) -> float:
    """Element spacing (wavelengths) putting the ``loss_db`` point of an
    ``n``-element uniform line array at ``half_width`` degrees off axis."""
    target = 10.0 ** (-loss_db / 20.0)
    s = math.sin(math.radians(half_width))

    def excess(d):
        x = math.pi * d * s
        return abs(math.sin(n * x) / (n * math.sin(x))) - target

    # main-lobe edge lies before the first null at n*pi*d*s = pi
    upper = (1.0 - 1e-9) / (n * s)
    return brentq(excess, 1e-6 / (n * s), upper, xtol=1e-14)


def noise_components(frequency: float, env: EnvironmentParams) -> dict:
    """Coates/Wenz spectrum levels (dB re 1 uPa^2/Hz), ``frequency`` in kHz."""
    if frequency <= 0:
        raise DomainError(f"frequency must be positive, got {frequency}")
    f = frequency
    lf = math.log10(f)
    wind = env.wind_speed_knots * KNOT
    return {
        "turbulence": 17.0 - 30.0 * lf,
        "shipping": 40.0 + 20.0 * (env.shipping_level - 0.5) + 26.0 * lf - 60.0 * math.log10(f + 0.03),
        "wind": 50.0 + 7.5 * math.sqrt(wind) + 20.0 * lf - 40.0 * math.log10(f + 0.4),
        "thermal": -15.0 + 20.0 * lf,
    }


def power_sum_db(levels) -> float:
    levels = np.asarray(list(levels), dtype=float)
    return float(10.0 * np.log10(np.sum(10.0 ** (levels / 10.0))))


def ambient_noise_level(frequency: float, env: EnvironmentParams) -> float:
    """Total ambient noise spectrum level, power sum of the four components."""
    return power_sum_db(noise_components(frequency, env).values())


def surface_backscatter(grazing_angle: float, wind_knots: float, frequency_khz: float) -> float:
    """Chapman & Harris surface scattering strength (dB), capped at 0 dB."""
    w = max(wind_knots, 1.0)
    beta = 107.0 * (w * (frequency_khz * 1000.0) ** (1.0 / 3.0)) ** -0.58
    s = 3.3 * beta * math.log10(grazing_angle / 30.0) - 42.4 * math.log10(beta) + 2.6
    return min(s, 0.0)


def backscatter_strength(
    kind: str, grazing_angle: float, env: EnvironmentParams, frequency: float = 675.0
) -> float:
    """Scattering strength in dB for ``kind`` in {seafloor, surface, volume}.

    For ``volume`` the result is per cubic metre and ignores the angle.
    """
    if kind == "volume":
        return env.volume_scattering
    if kind not in ("seafloor", "surface"):
        raise ConfigurationError(f"unknown backscatter kind {kind!r}")
    if not 0.0 < grazing_angle <= 90.0:
        raise DomainError(f"grazing angle {grazing_angle} outside (0, 90]")
    if kind == "seafloor":
        return env.lambert_mu + 20.0 * math.log10(math.sin(math.radians(grazing_angle)))
    return surface_backscatter(grazing_angle, env.wind_speed_knots, frequency)


def echo_level(
    target_strength: float,
    range_m: float,
    angle: float,
    beam: BeamSpec,
    sonar: SonarParams,
    env: EnvironmentParams,
) -> float:
    """Active sonar equation with two-way spreading and two-way pattern loss."""
    if not 1.0 <= range_m <= sonar.max_range:
        raise DomainError(f"range {range_m} outside [1, {sonar.max_range}]")
    return (
        sonar.source_level
        - 2.0 * transmission_loss(range_m, sonar.frequency, env)
        + target_strength
        - 2.0 * beam_pattern_loss(beam, angle)
    )
