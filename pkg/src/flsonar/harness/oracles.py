"""Independent reference computations used to check the fast code paths.

Each oracle avoids the implementation it checks: overlap areas come from
rejection sampling, binomial intervals from scipy's Beta quantiles, and
echo levels from a hand evaluation of the sonar equation with the
closed-form uniform-array factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from .. import acoustics as ac
from ..occupancy import MapGeometry, overlap_area_translation
from ..worldsim import AcousticParams, Obstacle, VehicleState, World, effective_sonar, make_beams, obstacle_echoes
from .stats import clopper_pearson


@dataclass(frozen=True)
class OracleCheck:
    name: str
    value: float
    reference: float
    tolerance: float

    @property
    def error(self) -> float:
        return abs(self.value - self.reference)

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


def sample_cell(geom: MapGeometry, cell, n: int, rng) -> tuple:
    """``n`` area-uniform (forward, starboard) points inside ``cell``."""
    i, j = cell
    r0, r1 = i * geom.cell_length, (i + 1) * geom.cell_length
    lo, hi = np.radians(geom.beam_edges[j]), np.radians(geom.beam_edges[j + 1])
    r = np.sqrt(rng.uniform(r0 * r0, r1 * r1, n))
    th = rng.uniform(lo, hi, n)
    return r * np.cos(th), r * np.sin(th)


def mc_translation_overlap(geom: MapGeometry, target, source, shift: float, n: int, rng) -> float:
    """Fraction of ``target`` whose pre-image, ``shift`` metres further
    ahead, lies in ``source``."""
    fwd, stb = sample_cell(geom, target, n, rng)
    ring, beam = geom.locate(fwd + shift, stb)
    return float(np.mean((ring == source[0]) & (beam == source[1])))


def beta_quantile_interval(k: int, n: int, confidence: float = 0.95) -> tuple:
    alpha = 1.0 - confidence
    lower = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
    upper = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lower, upper


def uniform_array_loss(n: int, spacing: float, off_axis_deg: float) -> float:
    """One-way loss (dB) of an ``n``-element uniform line array."""
    x = math.pi * spacing * math.sin(math.radians(off_axis_deg))
    if abs(math.sin(x)) < 1e-15:
        return 0.0
    return -20.0 * math.log10(abs(math.sin(n * x) / (n * math.sin(x))))


def hand_echo_level(ts: float, range_m: float, off_axis_deg: float, params: AcousticParams) -> float:
    """SL - 2 TL + TS - 2 PL for the forward beam, evaluated term by term."""
    sonar = effective_sonar(params)
    env = params.environment
    t, s, z, f = env.temperature, env.salinity, env.sonar_depth, sonar.frequency
    ft = 21.9 * 10 ** (6 - 1520 / (t + 273))
    a = 8.68e3 * (s * 2.34e-6 * ft * f * f / (ft * ft + f * f) + 3.38e-6 * f * f / ft) * (1 - 6.54e-4 * z / 10)
    a += 0.11 * f * f / (1 + f * f) + 0.003
    tl = 20 * math.log10(range_m) + a * range_m / 1000
    pl = uniform_array_loss(params.forward_elements, params.forward_spacing, off_axis_deg)
    return sonar.source_level - 2 * tl + ts - 2 * pl


def overlap_checks(n_cases: int = 100, samples: int = 400_000, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    geom = MapGeometry(100, 0.5, (-25.0, -5.0, 5.0, 25.0))
    checks = []
    while len(checks) < n_cases:
        i = int(rng.integers(1, geom.n_range - 4))
        j = int(rng.integers(0, geom.n_beams))
        shift = float(rng.uniform(-1.5, 1.5))
        # a source cell that the shifted target actually reaches
        fwd, stb = sample_cell(geom, (i, j), 1, rng)
        m, n = geom.locate(fwd + shift, stb)
        if m[0] < 0:
            continue
        src = (int(m[0]), int(n[0]))
        value = overlap_area_translation((i, j), src, shift, 1.0, geom)
        ref = mc_translation_overlap(geom, (i, j), src, shift, samples, rng)
        checks.append(OracleCheck(f"overlap target={i, j} source={src} shift={shift:+.3f}", value, ref, 2e-3))
    return checks


def clopper_pearson_checks(n_cases: int = 1000, seed: int = 1) -> list:
    rng = np.random.default_rng(seed)
    cases = [(0, 1000), (1000, 1000), (19, 1000), (0, 1), (1, 1)]
    while len(cases) < n_cases:
        n = int(rng.integers(1, 2000))
        cases.append((int(rng.integers(0, n + 1)), n))
    checks = []
    for k, n in cases:
        got = clopper_pearson(k, n, 0.95)
        ref = beta_quantile_interval(k, n, 0.95)
        checks.append(OracleCheck(f"clopper-pearson k={k} n={n}", max(abs(got[0] - ref[0]), abs(got[1] - ref[1])), 0.0, 1e-6))
    return checks


def sonar_equation_checks(params: AcousticParams | None = None) -> list:
    params = params or AcousticParams()
    sonar = effective_sonar(params)
    env = params.environment
    (fwd,) = make_beams(params, 1)
    checks = []
    for ts, rng_m, angle in ((-20.0, 30.0, 0.0), (-30.0, 50.0, 0.0), (-25.0, 20.0, 3.0), (-30.0, 10.0, -4.5)):
        value = ac.echo_level(ts, rng_m, angle, fwd, sonar, env)
        checks.append(OracleCheck(f"echo TS={ts} r={rng_m} angle={angle}", value, hand_echo_level(ts, rng_m, angle, params), 0.5))
    # synthesized ping: obstacle on axis, near face at 30 m
    world = World((Obstacle(32.0, 0.0, 2.0, -20.0),), env)
    state = VehicleState(0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.5)
    echoes = obstacle_echoes(world, state, (fwd,), sonar, env)
    k = int(np.argmax(echoes[0]))
    checks.append(OracleCheck("echo bin index for near face at 30 m", k, math.ceil(30.0 / sonar.cell_length) - 1, 0))
    checks.append(
        OracleCheck("echo bin level for near face at 30 m", 10 * math.log10(echoes[0, k]), hand_echo_level(-20.0, 30.0, 0.0, params), 0.5)
    )
    return checks


def run_all(quick: bool = False) -> dict:
    return {
        "overlap area (rejection sampling)": overlap_checks(20 if quick else 100, 200_000 if quick else 1_000_000),
        "clopper-pearson (beta quantiles)": clopper_pearson_checks(100 if quick else 1000),
        "sonar equation (hand calculation)": sonar_equation_checks(),
    }


def format_report(results: dict) -> tuple:
    """Text report and overall pass flag."""
    lines = []
    ok = True
    for group, checks in results.items():
        passed = sum(c.passed for c in checks)
        ok &= passed == len(checks)
        worst = max(checks, key=lambda c: c.error - c.tolerance)
        lines.append(f"[{'PASS' if passed == len(checks) else 'FAIL'}] {group}: {passed}/{len(checks)} within tolerance")
        lines.append(f"       worst: {worst.name}: value={worst.value:.6g} reference={worst.reference:.6g} "
                     f"error={worst.error:.3g} tol={worst.tolerance:g}")
    return "\n".join(lines) + "\n", ok
