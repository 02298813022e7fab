from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hankel_data_model import InvalidInputError, PreconditionError, SchwarzSample
from schwarz_functions import (
    BlaschkeSpec, ProkhorovParams, ProkhorovRegion, SAMPLE_COLUMNS, SamplerConfig,
    blaschke_coefficients, carlson_residuals, carlson_residuals_array, coefficients_frame,
    convex_mix, fourier_coefficients, prokhorov_grid, prokhorov_margin, prokhorov_margins,
    region_membership, sample_coefficients, sample_schwarz, samples_frame, witness_samples,
)


zeros_strategy = st.lists(
    st.tuples(st.floats(0.0, 0.9), st.floats(0.0, 2 * np.pi)).map(
        lambda p: complex(p[0] * np.cos(p[1]), p[0] * np.sin(p[1]))),
    max_size=4,
)


def test_blaschke_examples():
    assert blaschke_coefficients(BlaschkeSpec()).c == (1, 0, 0, 0)
    assert blaschke_coefficients(BlaschkeSpec(zeros=(0,))).c == (0, 1, 0, 0)
    half = blaschke_coefficients(BlaschkeSpec(zeros=(0.5,))).c
    assert half == pytest.approx((0.5, -0.75, -0.375, -0.1875))


def test_blaschke_factor_is_taken_literally():
    # (alpha - z)/(1 - conj(alpha) z) with no unimodular constant in front
    c = blaschke_coefficients(BlaschkeSpec(zeros=(0.5j,))).c
    assert c == pytest.approx((0.5j, -0.75, 0.375j, 0.1875))
    assert blaschke_coefficients(BlaschkeSpec(zeros=(-0.5,))).c[0] == pytest.approx(-0.5)


def test_normalized_blaschke_factor_is_opt_in():
    c = blaschke_coefficients(BlaschkeSpec(zeros=(0.5j,), normalized=True)).c
    assert c == pytest.approx((0.5, 0.75j, 0.375, -0.1875j))
    assert blaschke_coefficients(BlaschkeSpec(zeros=(-0.5,), normalized=True)).c[0] == pytest.approx(0.5)
    # real positive zeros and the origin are unaffected
    assert (blaschke_coefficients(BlaschkeSpec(zeros=(0, 0.5), normalized=True)).c
            == pytest.approx(blaschke_coefficients(BlaschkeSpec(zeros=(0, 0.5))).c))


def test_normalized_sampler_only_rotates_the_factors():
    literal, _ = sample_coefficients(11, SamplerConfig(count=300, mix_probability=0.0))
    rotated, _ = sample_coefficients(
        11, SamplerConfig(count=300, mix_probability=0.0, normalized=True))
    assert not np.allclose(literal, rotated)
    assert np.allclose(np.abs(literal[:, 0]), np.abs(rotated[:, 0]), atol=1e-12)
    assert np.allclose(carlson_residuals_array(literal), carlson_residuals_array(rotated), atol=1e-12)


def test_blaschke_spec_validation():
    with pytest.raises(InvalidInputError):
        BlaschkeSpec(zeros=(1.0,))
    with pytest.raises(InvalidInputError):
        BlaschkeSpec(scale=1.5)


@given(st.floats(0.0, 2 * np.pi), zeros_strategy, st.floats(0.5, 1.0), st.booleans())
@settings(max_examples=50, deadline=None)
def test_taylor_coefficients_agree_with_fft(rotation, zeros, scale, normalized):
    spec = BlaschkeSpec(rotation=rotation, zeros=tuple(zeros), scale=scale, normalized=normalized)
    assert np.allclose(blaschke_coefficients(spec).c, fourier_coefficients(spec), atol=1e-9)


def test_sampling_is_deterministic():
    config = SamplerConfig(count=500)
    a, prov_a = sample_coefficients(3, config)
    b, prov_b = sample_coefficients(3, config)
    assert np.array_equal(a, b) and prov_a == prov_b
    c, _ = sample_coefficients(4, config)
    assert not np.array_equal(a, c)
    w, _ = sample_coefficients(3, config, worker=1)
    assert not np.array_equal(a, w)


def test_samples_satisfy_the_lemmas():
    c, provenance = sample_coefficients(42, SamplerConfig(count=20000))
    r2, r4 = carlson_residuals_array(c)
    assert r2.min() >= -1e-9 and r4.min() >= -1e-9
    assert np.abs(c[:, 0]).max() <= 1.0 + 1e-12
    for params in prokhorov_grid():
        assert prokhorov_margins(c, params).min() >= -1e-9
    assert any(p.startswith("mix(") for p in provenance)


def test_sample_schwarz_yields_records():
    samples = list(sample_schwarz(7, SamplerConfig(count=5)))
    assert [s.index for s in samples] == [0, 1, 2, 3, 4]
    assert all(isinstance(s, SchwarzSample) and s.seed == 7 for s in samples)


def test_sampler_config_validation():
    with pytest.raises(InvalidInputError):
        SamplerConfig(count=0)
    with pytest.raises(InvalidInputError):
        SamplerConfig(count=1, mix_probability=2.0)


def test_convex_mix_stays_in_the_coefficient_body():
    first, second = witness_samples()[0], witness_samples()[1]
    mixed = convex_mix(first, second, 0.25)
    assert mixed.c == pytest.approx((0.25, 0.75, 0, 0))
    r2, r4 = carlson_residuals(mixed)
    assert r2 >= 0 and r4 >= 0
    with pytest.raises(InvalidInputError):
        convex_mix(first, second, 1.5)


def test_convex_mixes_satisfy_the_prokhorov_bound():
    samples = list(sample_schwarz(21, SamplerConfig(count=400, mix_probability=0.0)))
    rng = np.random.default_rng(21)
    pairs = rng.integers(0, len(samples), size=(300, 2))
    weights = rng.random(300)
    mixes = [convex_mix(samples[i], samples[j], w) for (i, j), w in zip(pairs, weights)]
    mixes.extend(convex_mix(a, b, 0.5) for a in witness_samples() for b in witness_samples())
    c = np.array([s.c for s in mixes], dtype=complex)
    for params in prokhorov_grid():
        assert prokhorov_margins(c, params).min() >= -1e-9
        assert min(prokhorov_margin(s, params) for s in mixes[-16:]) >= -1e-9


def test_equality_cases_have_zero_residual():
    z, z2 = witness_samples()[:2]
    assert carlson_residuals(z) == (0.0, 0.0)
    assert carlson_residuals(z2) == (0.0, 0.0)


def test_region_membership():
    assert region_membership(ProkhorovParams(-2, 1)) is ProkhorovRegion.D2
    assert region_membership(ProkhorovParams(Fraction(-2, 19), 1)) is ProkhorovRegion.D1
    assert region_membership(ProkhorovParams(Fraction(1, 2), 1)) is ProkhorovRegion.D1
    assert region_membership(ProkhorovParams(3, 0)) is ProkhorovRegion.OUTSIDE
    assert region_membership(ProkhorovParams(1, -1)) is ProkhorovRegion.OUTSIDE


def test_prokhorov_margin_rejects_parameters_outside_the_region():
    z3 = witness_samples()[2]
    assert prokhorov_margin(z3, ProkhorovParams(-2, 1)) == 0.0
    with pytest.raises(PreconditionError):
        prokhorov_margin(z3, ProkhorovParams(3, 0))


def test_grid_is_admissible_and_contains_the_proof_parameters():
    grid = prokhorov_grid()
    assert len(grid) == 22
    assert ProkhorovParams(-2, 1) in grid
    assert ProkhorovParams(Fraction(-2, 19), 1) in grid
    assert all(region_membership(p) is not ProkhorovRegion.OUTSIDE for p in grid)


def test_sample_tables_have_the_csv_layout():
    c, provenance = sample_coefficients(1, SamplerConfig(count=10))
    df = coefficients_frame(c, provenance, 1)
    assert list(df.columns) == SAMPLE_COLUMNS
    assert len(df) == 10
    assert df['abs_h3'].isna().all()
    witnesses = samples_frame(witness_samples())
    assert witnesses['c1_re'].tolist() == [1.0, 0.0, 0.0, -0.5]
    assert SchwarzSample.from_dict(witnesses.iloc[3].to_dict()).c[3] == pytest.approx(3 / 16)
