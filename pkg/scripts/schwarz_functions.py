"""
Schwarz function coefficient tuples (c1..c4): Blaschke products, random sampling,
convex mixes, and the two coefficient lemmas used by the theorem pipeline:

    Carlson:    |c2| <= 1 - |c1|^2,   |c4| <= 1 - |c1|^2 - |c2|^2
    Prokhorov:  |c3 + mu c1 c2 + nu c1^3| <= 1   for (mu, nu) in D1 or D2

The lemma checks here only try to falsify; the pipeline takes them as given.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from hankel_data_model import (
    InvalidInputError, PreconditionError, SchwarzSample, to_fraction,
)


logger = logging.getLogger(__name__)

LEMMA_TOLERANCE = 1e-9
MAX_ZERO_MODULUS = 0.95
MIN_SCALE = 0.5
COEFFICIENT_COUNT = 4

SAMPLE_COLUMNS = [
    'index', 'c1_re', 'c1_im', 'c2_re', 'c2_im', 'c3_re', 'c3_im', 'c4_re', 'c4_im',
    'r2', 'r4', 'abs_h3', 'provenance', 'seed',
]


@dataclass(frozen=True)
class BlaschkeSpec:
    """omega(z) = scale * exp(i rotation) * z * prod_k B_k(z).

    Each zero alpha contributes the factor (alpha - z)/(1 - conj(alpha) z), or z
    itself when alpha = 0. With normalized=True every nonzero factor is also
    multiplied by the unimodular constant |alpha|/alpha, making B_k(0) = |alpha|.
    """
    rotation: float = 0.0
    zeros: Tuple[complex, ...] = ()
    scale: float = 1.0
    normalized: bool = False

    def __post_init__(self):
        zeros = tuple(complex(a) for a in self.zeros)
        for alpha in zeros:
            if not abs(alpha) < 1.0:
                raise InvalidInputError(f"Blaschke zero {alpha} is not inside the unit disk")
        if not 0.0 < self.scale <= 1.0:
            raise InvalidInputError(f"Scale must lie in (0, 1], got {self.scale}")
        object.__setattr__(self, 'zeros', zeros)

    def describe(self) -> str:
        zeros = ", ".join(f"{a.real:.6g}{a.imag:+.6g}j" for a in self.zeros)
        form = ", normalized" if self.normalized else ""
        return f"blaschke(theta={self.rotation:.6g}, r={self.scale:.6g}, zeros=[{zeros}]{form})"


@dataclass(frozen=True)
class SamplerConfig:
    count: int
    max_degree: int = 4
    mix_probability: float = 0.1
    normalized: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise InvalidInputError(f"count must be >= 1, got {self.count}")
        if not 0 <= self.max_degree <= COEFFICIENT_COUNT:
            raise InvalidInputError(f"max_degree must lie in [0, 4], got {self.max_degree}")
        if not 0.0 <= self.mix_probability <= 1.0:
            raise InvalidInputError(f"mix_probability must lie in [0, 1], got {self.mix_probability}")


@dataclass(frozen=True)
class ProkhorovParams:
    mu: Fraction
    nu: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'mu', to_fraction(self.mu))
        object.__setattr__(self, 'nu', to_fraction(self.nu))

    def __str__(self) -> str:
        return f"({self.mu}, {self.nu})"


class ProkhorovRegion(Enum):
    D1 = "D1"
    D2 = "D2"
    OUTSIDE = "outside"


# ============================================================================
# Blaschke products
# ============================================================================

def _unimodular(alpha: np.ndarray) -> np.ndarray:
    """|alpha|/alpha, and 1 where alpha = 0."""
    safe = np.where(alpha == 0, 1.0, alpha)
    return np.where(alpha == 0, 1.0, np.abs(alpha) / safe)


def _factor_coefficients(alpha: complex, length: int, normalized: bool = False) -> np.ndarray:
    """Taylor coefficients z^0..z^(length-1) of one Blaschke factor."""
    coeffs = np.zeros(length, dtype=complex)
    if alpha == 0:
        if length > 1:
            coeffs[1] = 1.0
        return coeffs
    conj = np.conj(alpha)
    # (alpha - z)/(1 - conj z) = alpha + (|alpha|^2 - 1)(z + conj z^2 + conj^2 z^3 + ...)
    coeffs[0] = alpha
    coeffs[1:] = (abs(alpha) ** 2 - 1.0) * conj ** np.arange(length - 1)
    if normalized:
        coeffs = coeffs * (abs(alpha) / alpha)
    return coeffs


def blaschke_coefficients(spec: BlaschkeSpec, seed: Optional[int] = None,
                          index: int = 0) -> SchwarzSample:
    """c1..c4 of the Schwarz function described by spec."""
    product = np.zeros(COEFFICIENT_COUNT, dtype=complex)
    product[0] = 1.0
    for alpha in spec.zeros:
        factor = _factor_coefficients(alpha, COEFFICIENT_COUNT, spec.normalized)
        product = np.convolve(product, factor)[:COEFFICIENT_COUNT]
    c = spec.scale * np.exp(1j * spec.rotation) * product
    return SchwarzSample(
        c=tuple(complex(v) for v in c),
        provenance=spec.describe(),
        seed=seed,
        index=index,
    )


def _evaluate_blaschke(spec: BlaschkeSpec, z: np.ndarray) -> np.ndarray:
    values = spec.scale * np.exp(1j * spec.rotation) * z
    for alpha in spec.zeros:
        if alpha == 0:
            values = values * z
            continue
        values = values * (alpha - z) / (1.0 - np.conj(alpha) * z)
        if spec.normalized:
            values = values * (abs(alpha) / alpha)
    return values


def fourier_coefficients(spec: BlaschkeSpec, radius: float = 0.5,
                         points: int = 256) -> np.ndarray:
    """c1..c4 extracted numerically by an FFT over the circle |z| = radius."""
    if not 0.0 < radius < 1.0 or points < 2 * COEFFICIENT_COUNT:
        raise InvalidInputError(f"Need 0 < radius < 1 and enough points, got {radius}, {points}")
    z = radius * np.exp(2j * np.pi * np.arange(points) / points)
    spectrum = np.fft.fft(_evaluate_blaschke(spec, z)) / points
    k = np.arange(1, COEFFICIENT_COUNT + 1)
    return spectrum[k] / radius ** k


# ============================================================================
# Sampling
# ============================================================================

def _truncated_product(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Row-wise Cauchy product of (n, 4) coefficient arrays, truncated to 4 terms."""
    out = np.zeros_like(left)
    for k in range(COEFFICIENT_COUNT):
        for i in range(k + 1):
            out[:, k] += left[:, i] * right[:, k - i]
    return out


def sample_coefficients(seed: int, config: SamplerConfig,
                        worker: Optional[int] = None) -> Tuple[np.ndarray, List[str]]:
    """Draw config.count coefficient tuples as an (n, 4) complex array.

    Zeros are uniform in the disk of radius 0.95, rotations uniform, scales
    uniform in [0.5, 1]. With probability mix_probability a row is instead the
    convex combination of two earlier rows. worker selects an independent
    stream derived from (seed, worker).

    Returns:
        (coefficients, provenance strings)
    """
    rng = np.random.default_rng(seed if worker is None else [seed, worker])
    n = config.count

    # Fixed draw order keeps the stream independent of which branch a row takes
    degrees = rng.integers(0, config.max_degree + 1, size=n)
    radii = MAX_ZERO_MODULUS * np.sqrt(rng.random((n, COEFFICIENT_COUNT)))
    angles = rng.uniform(0.0, 2 * np.pi, size=(n, COEFFICIENT_COUNT))
    rotations = rng.uniform(0.0, 2 * np.pi, size=n)
    scales = rng.uniform(MIN_SCALE, 1.0, size=n)
    mix_flags = rng.random(n) < config.mix_probability
    mix_weights = rng.random(n)
    mix_parents = rng.random((n, 2))

    zeros = radii * np.exp(1j * angles)
    product = np.zeros((n, COEFFICIENT_COUNT), dtype=complex)
    product[:, 0] = 1.0
    for slot in range(config.max_degree):
        active = degrees > slot
        alpha = zeros[:, slot]
        factor = np.zeros((n, COEFFICIENT_COUNT), dtype=complex)
        factor[:, 0] = 1.0
        a = alpha[active]
        powers = np.conj(a)[:, None] ** np.arange(COEFFICIENT_COUNT - 1)[None, :]
        active_factor = np.zeros((a.size, COEFFICIENT_COUNT), dtype=complex)
        active_factor[:, 0] = a
        active_factor[:, 1:] = (np.abs(a) ** 2 - 1.0)[:, None] * powers
        if config.normalized:
            active_factor = active_factor * _unimodular(a)[:, None]
        # a zero at the origin contributes the factor z
        active_factor[a == 0] = [0.0, 1.0, 0.0, 0.0]
        factor[active] = active_factor
        product = _truncated_product(product, factor)
    c = (scales * np.exp(1j * rotations))[:, None] * product

    provenance = [f"blaschke(degree={d})" for d in degrees]
    mixed = 0
    for i in np.flatnonzero(mix_flags):
        if i < 2:
            continue
        j, k = (mix_parents[i] * i).astype(int)
        w = mix_weights[i]
        c[i] = w * c[j] + (1.0 - w) * c[k]
        provenance[i] = f"mix({j},{k},w={w:.6g})"
        mixed += 1
    logger.debug("Sampled %d Schwarz tuples (%d convex mixes), seed=%s worker=%s",
                 n, mixed, seed, worker)
    return c, provenance


def sample_schwarz(seed: int, config: SamplerConfig,
                   worker: Optional[int] = None) -> Iterator[SchwarzSample]:
    """Deterministic stream of SchwarzSample records for a fixed seed."""
    c, provenance = sample_coefficients(seed, config, worker)
    for index in range(c.shape[0]):
        yield SchwarzSample(
            c=tuple(complex(v) for v in c[index]),
            provenance=provenance[index],
            seed=seed,
            index=index,
        )


def convex_mix(first: SchwarzSample, second: SchwarzSample, weight: float) -> SchwarzSample:
    """weight * first + (1 - weight) * second, again a Schwarz tuple."""
    if not 0.0 <= weight <= 1.0:
        raise InvalidInputError(f"Mix weight must lie in [0, 1], got {weight}")
    c = tuple(weight * a + (1.0 - weight) * b for a, b in zip(first.c, second.c))
    return SchwarzSample(
        c=c,
        provenance=f"mix({first.index},{second.index},w={weight:.6g})",
        seed=first.seed,
        index=first.index,
    )


# Exact witnesses where the lemmas and theorem bounds are tight or nearly so
WITNESS_COEFFICIENTS = {
    "z": (Fraction(1), Fraction(0), Fraction(0), Fraction(0)),
    "z^2": (Fraction(0), Fraction(1), Fraction(0), Fraction(0)),
    "z^3": (Fraction(0), Fraction(0), Fraction(1), Fraction(0)),
    "z(z-1/2)/(1-z/2)": (Fraction(-1, 2), Fraction(3, 4), Fraction(3, 8), Fraction(3, 16)),
}


def witness_samples() -> List[SchwarzSample]:
    return [
        SchwarzSample(c=tuple(complex(v) for v in c), provenance=f"witness: {name}", index=i)
        for i, (name, c) in enumerate(WITNESS_COEFFICIENTS.items())
    ]


# ============================================================================
# Lemma checks
# ============================================================================

def carlson_residuals_array(c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised (r2, r4) for an (n, 4) coefficient array."""
    c = np.atleast_2d(c)
    a1, a2, a4 = np.abs(c[:, 0]), np.abs(c[:, 1]), np.abs(c[:, 3])
    r2 = 1.0 - a1 ** 2 - a2
    r4 = 1.0 - a1 ** 2 - a2 ** 2 - a4
    return r2, r4


def carlson_residuals(s: SchwarzSample) -> Tuple[float, float]:
    """(1 - |c1|^2 - |c2|,  1 - |c1|^2 - |c2|^2 - |c4|)."""
    r2, r4 = carlson_residuals_array(np.array([s.c], dtype=complex))
    return float(r2[0]), float(r4[0])


def region_membership(p: ProkhorovParams) -> ProkhorovRegion:
    """Exact membership of (mu, nu) in D1, D2 or neither; D1 wins on the overlap."""
    mu, nu = abs(p.mu), p.nu
    if mu <= Fraction(1, 2) and -1 <= nu <= 1:
        return ProkhorovRegion.D1
    if Fraction(1, 2) <= mu <= 2:
        lower = Fraction(4, 27) * (mu + 1) ** 3 - (mu + 1)
        if lower <= nu <= 1:
            return ProkhorovRegion.D2
    return ProkhorovRegion.OUTSIDE


def _require_admissible(p: ProkhorovParams):
    if region_membership(p) is ProkhorovRegion.OUTSIDE:
        raise PreconditionError(f"Prokhorov parameters {p} lie outside D1 and D2")


def prokhorov_margins(c: np.ndarray, p: ProkhorovParams) -> np.ndarray:
    """Vectorised 1 - |c3 + mu c1 c2 + nu c1^3| over an (n, 4) array."""
    _require_admissible(p)
    c = np.atleast_2d(c)
    mu, nu = float(p.mu), float(p.nu)
    value = c[:, 2] + mu * c[:, 0] * c[:, 1] + nu * c[:, 0] ** 3
    return 1.0 - np.abs(value)


def prokhorov_margin(s: SchwarzSample, p: ProkhorovParams) -> float:
    return float(prokhorov_margins(np.array([s.c], dtype=complex), p)[0])


def prokhorov_grid() -> List[ProkhorovParams]:
    """(-2, 1), (-2/19, 1) and 20 further points spread over D1 and D2."""
    grid = [ProkhorovParams(-2, 1), ProkhorovParams(Fraction(-2, 19), 1)]
    for mu in (Fraction(-1, 2), Fraction(-1, 4), Fraction(0), Fraction(1, 4), Fraction(1, 2)):
        for nu in (-1, 0, 1):
            grid.append(ProkhorovParams(mu, nu))
    grid.extend([
        ProkhorovParams(1, 1),
        ProkhorovParams(1, Fraction(-22, 27)),
        ProkhorovParams(2, 1),
        ProkhorovParams(Fraction(-3, 2), Fraction(-5, 27)),
        ProkhorovParams(Fraction(3, 2), 1),
    ])
    return grid


# ============================================================================
# Tables
# ============================================================================

def coefficients_frame(c: np.ndarray, provenance: Sequence[str],
                       seed: Optional[int] = None,
                       abs_h3: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Sample log with the CSV column layout (re/im of c1..c4, r2, r4, |H3|)."""
    c = np.atleast_2d(c)
    r2, r4 = carlson_residuals_array(c)
    data = {'index': np.arange(c.shape[0])}
    for k in range(COEFFICIENT_COUNT):
        data[f'c{k + 1}_re'] = c[:, k].real
        data[f'c{k + 1}_im'] = c[:, k].imag
    data['r2'] = r2
    data['r4'] = r4
    data['abs_h3'] = np.full(c.shape[0], np.nan) if abs_h3 is None else abs_h3
    data['provenance'] = list(provenance)
    data['seed'] = seed
    return pd.DataFrame(data, columns=SAMPLE_COLUMNS)


def samples_frame(samples: Sequence[SchwarzSample]) -> pd.DataFrame:
    df = coefficients_frame(
        np.array([s.c for s in samples], dtype=complex).reshape(-1, COEFFICIENT_COUNT),
        [s.provenance for s in samples],
    )
    df['index'] = [s.index for s in samples]
    df['seed'] = [s.seed for s in samples]
    return df
