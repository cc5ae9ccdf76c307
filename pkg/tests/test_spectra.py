import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockframes.erasure import BlockModel, MonteCarlo
from blockframes.errors import NumericalError, ValidationError
from blockframes.frames import FrameSpec, construct_frame
from blockframes.spectra import (
    SpectralModel,
    _clamped_eigvalsh,
    discrete_kl,
    empirical_spectrum,
    gram_spectrum,
    kl_divergence,
    kl_edges,
    manova_density,
    manova_edges,
    mp_density,
    subframe_spectra,
)

# (beta, gamma) pairs with beta * gamma = K / N <= 1
GRID = [(b, g) for b in (0.25, 0.5, 0.8, 1.0, 1.25, 2.0, 4.0) for g in (0.05, 0.2, 0.25, 0.5, 0.75)
        if b * g < 1]


def cosine_quadrature(density, lo, hi, points=20_000):
    """Integral of a square-root-edged density via lambda = c + r cos(theta)."""
    c, r = (lo + hi) / 2, (hi - lo) / 2
    theta = (np.arange(points) + 0.5) * np.pi / points
    return float(np.sum(density(c + r * np.cos(theta)) * r * np.sin(theta)) * np.pi / points)


@pytest.mark.parametrize("beta,gamma", GRID)
def test_manova_normalization(beta, gamma):
    model = SpectralModel.manova(beta, gamma)
    lo, hi = manova_edges(beta, gamma)
    cont = cosine_quadrature(lambda x: manova_density(x, beta, gamma), lo, hi)
    atoms = sum(w for _, w in model.atoms())
    assert cont + atoms == pytest.approx(1.0, abs=1e-6)
    assert model.total_mass() == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0, 1.5, 3.0])
def test_mp_normalization(beta):
    model = SpectralModel.marchenko_pastur(beta)
    lo, hi = model.support
    cont = cosine_quadrature(lambda x: mp_density(x, beta), lo, hi)
    assert cont + model.zero_mass == pytest.approx(1.0, abs=1e-6)
    assert model.total_mass() == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("beta", [0.3, 0.8, 1.0, 2.0])
def test_manova_tends_to_mp(beta):
    gamma = 1e-6
    lo, hi = SpectralModel.marchenko_pastur(beta).support
    x = np.linspace(lo, hi, 101)[1:-1]
    assert np.allclose(manova_density(x, beta, gamma), mp_density(x, beta), atol=1e-4)
    assert SpectralModel.manova(beta, gamma).point_mass[1] == 0.0


def test_manova_atom_at_inverse_gamma():
    # beta * gamma close to 1: many active columns relative to N
    model = SpectralModel.manova(2.5, 0.375)
    loc, weight = model.point_mass
    assert loc == pytest.approx(1 / 0.375)
    assert weight == pytest.approx(1 + 1 / 2.5 - 1 / (2.5 * 0.375))
    assert model.zero_mass == pytest.approx(1 - 1 / 2.5)


def test_parameter_validation():
    with pytest.raises(ValidationError):
        SpectralModel.manova(0.0, 0.5)
    with pytest.raises(ValidationError):
        SpectralModel.manova(1.0, 1.5)


def _sample_model(model, size, rng):
    lo, hi = model.support
    x = np.linspace(lo, hi, 200_001)
    pdf = model.density(x)
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) / 2 * np.diff(x))])
    cont = cdf[-1]
    atoms = model.atoms()
    weights = np.array([cont] + [w for _, w in atoms])
    which = rng.choice(len(weights), size=size, p=weights / weights.sum())
    out = np.interp(rng.random(size) * cont, cdf, x)
    for i, (loc, _) in enumerate(atoms, start=1):
        out[which == i] = loc
    return out


@pytest.mark.parametrize("beta,gamma", [(0.8, 0.3125), (1.25, 0.25), (0.5, 0.5)])
def test_kl_self_consistency(beta, gamma):
    model = SpectralModel.manova(beta, gamma)
    samples = _sample_model(model, 400_000, np.random.default_rng(2))
    edges = np.linspace(0, 1.1 * max(model.support[1], samples.max()), 51)
    p, _ = np.histogram(samples, edges)
    kl = discrete_kl(p, model.bin_probabilities(edges))
    # sampling noise alone gives about (bins - 1) / (2 * samples)
    assert kl < 2e-3


@given(
    p=st.lists(st.floats(0, 10), min_size=1, max_size=30),
    seed=st.integers(0, 1000),
)
def test_kl_nonnegative(p, seed):
    p = np.array(p)
    if p.sum() == 0:
        p[0] = 1.0
    q = np.random.default_rng(seed).random(len(p))
    assert discrete_kl(p, q) >= 0.0
    assert discrete_kl(p, p) == pytest.approx(0.0, abs=1e-12)


def _case_frame(perm=None, blocks=BlockModel(4, 4, 2)):
    rows = (0, 2, 5, 6, 14, 15)
    spec = FrameSpec.canonical("hadamard", 16, rows, blocks)
    return construct_frame(spec if perm is None else spec.with_perm(perm))


def test_gram_spectrum_uses_smaller_side():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 7)) + 1j * rng.normal(size=(3, 7))
    eigs = gram_spectrum(a)
    assert eigs.shape == (3,)
    full = np.linalg.eigvalsh(a.conj().T @ a)
    assert np.allclose(np.sort(eigs), full[-3:])


def test_negative_eigenvalue_is_numerical_error():
    with pytest.raises(NumericalError):
        _clamped_eigvalsh(np.diag([1.0, -1e-3]))


def test_trace_conservation(rng):
    frame = _case_frame()
    spectra = subframe_spectra(frame, np.array([[0, 1], [1, 3], [0, 2]]))
    # K > M: only M eigenvalues, but they still carry the whole trace K
    assert spectra.shape == (3, 6)
    assert np.allclose(spectra.sum(axis=1), 8.0, atol=1e-8)


def test_empirical_spectrum_pads_zeros():
    frame = _case_frame()
    spec = empirical_spectrum(frame, bins=10)
    assert spec.pad_zeros == 2
    assert spec.masses.sum() == pytest.approx(1.0)
    assert spec.masses[0] >= 2 / 8


def test_single_bin_kl_is_zero():
    frame = construct_frame(FrameSpec.canonical("hadamard", 64, tuple(range(0, 40, 2)),
                                                BlockModel(16, 4, 4)))
    model = SpectralModel.manova(16 / 20, 20 / 64)
    spec = empirical_spectrum(frame, MonteCarlo(200, 0), bins=1)
    spec = spec.rebin(kl_edges(model, spec, 1))
    assert kl_divergence(spec, model) == pytest.approx(0.0, abs=1e-12)


def test_histogram_range_enforced():
    frame = _case_frame()
    spec = empirical_spectrum(frame, bins=5)
    with pytest.raises(ValidationError):
        spec.rebin(np.linspace(0, 0.5, 6))
