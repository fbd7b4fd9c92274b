"""Evanescent field components and seeded synthesis of their realizations.

A component pins a coprime slope (a, b), a modulation frequency omega, and a
1-D modulating process.  Sample (n, m) of the complex component is

    s(n*a + m*b) * exp(1j * omega * (n*c + m*d))

with (c, d) the slope's Bezout companion, so the whole N-by-M field is driven
by one short 1-D process: the source of every rank deficiency measured later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lattice import LatticeRect, SlopePair

TWO_PI = 2.0 * math.pi


class ProcessKind(str, Enum):
    WHITE = "white"
    AR1 = "ar1"


@dataclass(frozen=True)
class ModulatingProcessSpec:
    """Stationary 1-D process driving one component.

    `variance` is the innovation variance: the marginal variance for white
    noise, and variance / (1 - ar^2) marginally for the AR(1) family.
    """

    kind: ProcessKind
    variance: float = 1.0
    ar_coefficient: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProcessKind(self.kind))
        if not self.variance > 0:
            raise ValueError("process variance must be positive")
        if not abs(self.ar_coefficient) < 1:
            raise ValueError("AR(1) coefficient must satisfy |ar| < 1")
        if self.kind is ProcessKind.WHITE and self.ar_coefficient != 0.0:
            raise ValueError("white process takes no AR coefficient")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a non-negative int")

    def autocovariance(self, lag: int) -> float:
        """Model autocovariance at integer lag."""
        if self.kind is ProcessKind.WHITE:
            return self.variance if lag == 0 else 0.0
        ar = self.ar_coefficient
        return self.variance * ar ** abs(lag) / (1.0 - ar * ar)


@dataclass(frozen=True)
class EvanescentComponent:
    slope: SlopePair
    omega: float
    process: ModulatingProcessSpec

    def __post_init__(self) -> None:
        omega = float(self.omega) % TWO_PI
        if not math.isfinite(omega):
            raise ValueError("omega must be finite")
        object.__setattr__(self, "omega", omega)

    def triple(self) -> tuple[int, int, float]:
        """Identity of the component: (a, b, omega mod 2*pi)."""
        return (self.slope.a, self.slope.b, self.omega)


@dataclass
class FieldSample:
    """One realization over a rectangle, kept in both layouts.

    `vectorized[n*M + m] == values[n, m]` by construction.
    """

    rect: LatticeRect
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.shape != (self.rect.N, self.rect.M):
            raise ValueError("values must have shape (N, M)")
        self.vectorized = self.values.reshape(self.rect.size)


def modulating_indices(slope: SlopePair, rect: LatticeRect) -> tuple[int, int]:
    """Inclusive range [k_min, k_max] of n*a + m*b over the rectangle.

    Consecutive integers: with gcd(a, b) = 1 every value in between is hit.
    Length is (N-1)*|a| + (M-1)*|b| + 1.
    """
    ext_n = (rect.N - 1) * slope.a
    ext_m = (rect.M - 1) * slope.b
    k_min = min(ext_m, 0)
    k_max = ext_n + max(ext_m, 0)
    return (k_min, k_max)


def check_distinct_triples(components) -> None:
    """Components sharing a slope must use different frequencies."""
    seen: set[tuple[int, int, float]] = set()
    for comp in components:
        t = comp.triple()
        if t in seen:
            raise ValueError(f"duplicate component triple (a, b, omega) = {t}")
        seen.add(t)


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _draw_process(
    spec: ModulatingProcessSpec,
    length: int,
    rng: np.random.Generator,
    trials: int | None = None,
    complex_valued: bool = True,
) -> np.ndarray:
    """Stationary draws, shape (length,) or (trials, length)."""
    shape = (length,) if trials is None else (trials, length)
    if complex_valued:
        # Circularly symmetric: unit-variance split evenly over re/im.
        unit = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    else:
        unit = rng.standard_normal(shape)
    if spec.kind is ProcessKind.WHITE:
        return np.sqrt(spec.variance) * unit
    ar = spec.ar_coefficient
    out = np.empty(shape, dtype=unit.dtype)
    scale = np.sqrt(spec.variance)
    out[..., 0] = unit[..., 0] * (scale / np.sqrt(1.0 - ar * ar))
    for k in range(1, length):
        out[..., k] = ar * out[..., k - 1] + scale * unit[..., k]
    return out


def _component_grids(comp: EvanescentComponent, rect: LatticeRect):
    n = np.arange(rect.N)[:, None]
    m = np.arange(rect.M)[None, :]
    k = n * comp.slope.a + m * comp.slope.b
    v = n * comp.slope.c + m * comp.slope.d
    return k, v


def synthesize_component(
    comp: EvanescentComponent, rect: LatticeRect, realization: int = 0
) -> FieldSample:
    """Draws one complex realization of a single component.

    Deterministic: the draw depends only on the process seed and the
    `realization` index, never on global RNG state.
    """
    k, v = _component_grids(comp, rect)
    k_min, k_max = modulating_indices(comp.slope, rect)
    rng = _rng(comp.process.seed, realization, 0)
    s = _draw_process(comp.process, k_max - k_min + 1, rng)
    values = s[k - k_min] * np.exp(1j * comp.omega * v)
    return FieldSample(rect, values)


def synthesize_real_component(
    comp: EvanescentComponent, rect: LatticeRect, realization: int = 0
) -> FieldSample:
    """Real-valued variant: cosine and sine carriers with independent
    modulating processes of identical covariance, from two sub-streams of
    the component seed."""
    k, v = _component_grids(comp, rect)
    k_min, k_max = modulating_indices(comp.slope, rect)
    length = k_max - k_min + 1
    s = _draw_process(comp.process, length, _rng(comp.process.seed, realization, 0),
                      complex_valued=False)
    t = _draw_process(comp.process, length, _rng(comp.process.seed, realization, 1),
                      complex_valued=False)
    phase = comp.omega * v
    values = s[k - k_min] * np.cos(phase) + t[k - k_min] * np.sin(phase)
    return FieldSample(rect, values)


def synthesize_sum(
    components, rect: LatticeRect, realization: int = 0, real_valued: bool = False
) -> FieldSample:
    """Superimposes independently drawn components.

    Raises:
        ValueError: when two components share the full (a, b, omega) triple;
            such a pair is a single component and would silently double its
            variance instead of adding an independent field.
    """
    components = list(components)
    check_distinct_triples(components)
    dtype = np.float64 if real_valued else np.complex128
    total = np.zeros((rect.N, rect.M), dtype=dtype)
    make = synthesize_real_component if real_valued else synthesize_component
    for comp in components:
        total = total + make(comp, rect, realization).values
    return FieldSample(rect, total)


def synthesize_batch(
    components,
    rect: LatticeRect,
    trials: int,
    seed: int,
    noise_power: float = 0.0,
) -> np.ndarray:
    """Vectorized stack of complex snapshots, shape (trials, N*M).

    Component processes are drawn from streams derived from `seed` and the
    component's position, so a batch is reproducible independently of any
    per-component seeds used elsewhere.  Optional circular white noise of
    the given power is added per snapshot.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    components = list(components)
    check_distinct_triples(components)
    out = np.zeros((trials, rect.size), dtype=np.complex128)
    for q, comp in enumerate(components):
        k, v = _component_grids(comp, rect)
        k_min, k_max = modulating_indices(comp.slope, rect)
        rng = _rng(seed, 1, q)
        s = _draw_process(comp.process, k_max - k_min + 1, rng, trials=trials)
        phase = np.exp(1j * comp.omega * v).reshape(rect.size)
        out += s[:, (k - k_min).reshape(rect.size)] * phase[None, :]
    if noise_power > 0.0:
        rng = _rng(seed, 2)
        noise = rng.standard_normal((trials, rect.size)) + 1j * rng.standard_normal(
            (trials, rect.size)
        )
        out += np.sqrt(noise_power / 2.0) * noise
    return out
