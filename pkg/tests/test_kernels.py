import functools
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from arbq import kernels

from conftest import all_bits


def random_problem(rng, q, density=0.6):
    lin = rng.normal(size=q)
    J = rng.normal(size=(q, q)) * (rng.random((q, q)) < density)
    J = np.triu(J, 1)
    J = J + J.T
    return lin, J, float(rng.normal())


def direct_energies(lin, J, off, X):
    return off + X @ lin + 0.5 * np.einsum("ki,ij,kj->k", X, J, X)


@pytest.mark.parametrize("q", [0, 1, 2, 5, 10, 14])
def test_energy_table_matches_direct(backend, q):
    rng = np.random.default_rng(q)
    lin, J, off = random_problem(rng, q)
    E = backend.energy_table(lin, J, off)
    assert E.shape == (1 << q,)
    assert np.max(np.abs(E - direct_energies(lin, J, off, all_bits(q)))) <= 1e-9


def test_backends_agree_on_energy_table():
    if not kernels.numba_available:
        pytest.skip("numba not importable")
    rng = np.random.default_rng(3)
    lin, J, off = random_problem(rng, 16)
    a = kernels.get_backend("numba").energy_table(lin, J, off)
    b = kernels.get_backend("numpy").energy_table(lin, J, off)
    assert np.max(np.abs(a - b)) <= 1e-9


def _anneal_inputs(seed, q=9, shots=20, sweeps=50):
    rng = np.random.default_rng(seed)
    lin, J, _ = random_problem(rng, q)
    temps = np.geomspace(3.0, 1e-3, sweeps)
    x0 = rng.integers(0, 2, (shots, q)).astype(np.int8)
    thr = rng.standard_exponential((shots, sweeps, q))
    return lin, J, temps, x0, thr


@pytest.mark.parametrize("seed", range(5))
def test_anneal_backends_bit_identical(seed):
    if not kernels.numba_available:
        pytest.skip("numba not importable")
    args = _anneal_inputs(seed)
    a = kernels.get_backend("numba").anneal(*args)
    b = kernels.get_backend("numpy").anneal(*args)
    assert np.array_equal(a, b)


def test_anneal_leaves_inputs_untouched(backend):
    lin, J, temps, x0, thr = _anneal_inputs(9)
    keep = x0.copy()
    backend.anneal(lin, J, temps, x0, thr)
    assert np.array_equal(x0, keep)


def test_anneal_cold_end_is_one_flip_stable(backend):
    lin, J, temps, x0, thr = _anneal_inputs(1, q=10, shots=30, sweeps=200)
    out = backend.anneal(lin, J, temps, x0, thr).astype(np.int64)
    field = lin + out @ J
    gain = (1 - 2 * out) * field
    assert np.all(gain >= -1e-12)


def test_anneal_zero_temperature_is_greedy_descent(backend):
    # with thresholds at zero only non-increasing moves are taken
    lin = np.array([1.0, -1.0, 0.5])
    J = np.zeros((3, 3))
    x0 = np.array([[1, 0, 1]], dtype=np.int8)
    out = backend.anneal(lin, J, np.array([1.0]), x0, np.zeros((1, 1, 3)))
    assert out.tolist() == [[0, 1, 0]]


@pytest.mark.slow
def test_anneal_two_state_boltzmann(backend):
    # a single variable with field d at fixed temperature T is a two-state chain
    d, T, shots, sweeps = 0.7, 0.5, 4000, 40
    rng = np.random.default_rng(0)
    lin = np.array([d])
    J = np.zeros((1, 1))
    x0 = rng.integers(0, 2, (shots, 1)).astype(np.int8)
    thr = rng.standard_exponential((shots, sweeps, 1))
    out = backend.anneal(lin, J, np.full(sweeps, T), x0, thr)
    p1 = math.exp(-d / T) / (1 + math.exp(-d / T))
    assert abs(out.mean() - p1) < 4 * math.sqrt(p1 * (1 - p1) / shots)


def dense_mixer(q, beta):
    rx = np.array([[math.cos(beta), -1j * math.sin(beta)], [-1j * math.sin(beta), math.cos(beta)]])
    return functools.reduce(np.kron, [rx] * q) if q else np.ones((1, 1))


@pytest.mark.parametrize("q", [1, 3, 6])
def test_mixer_matches_dense(backend, q):
    rng = np.random.default_rng(q)
    psi = rng.normal(size=1 << q) + 1j * rng.normal(size=1 << q)
    psi /= np.linalg.norm(psi)
    want = dense_mixer(q, 0.37) @ psi
    got = psi.copy()
    backend.apply_mixer(got, 0.37)
    assert np.max(np.abs(got - want)) <= 1e-12


def test_mixer_acts_on_the_right_bit(backend):
    # |x0=1, x1=0> is index 1; a pi/2 mixer flips every bit up to phase
    psi = np.zeros(4, dtype=np.complex128)
    psi[1] = 1.0
    backend.apply_mixer(psi, math.pi / 2)
    assert abs(abs(psi[2]) - 1.0) < 1e-12


def test_phase_matches_dense(backend):
    rng = np.random.default_rng(2)
    diag = rng.normal(size=32)
    psi = (rng.normal(size=32) + 1j * rng.normal(size=32)).astype(np.complex128)
    want = np.diag(np.exp(-1j * 0.9 * diag)) @ psi
    backend.apply_phase(psi, diag, 0.9)
    assert np.max(np.abs(psi - want)) <= 1e-12


def test_layers_preserve_norm(backend):
    rng = np.random.default_rng(4)
    psi = np.full(1 << 10, 1 / 32, dtype=np.complex128)
    diag = rng.normal(size=1 << 10) * 20
    for g, b in rng.uniform(0, math.pi, (4, 2)):
        backend.apply_phase(psi, diag, g)
        backend.apply_mixer(psi, b)
    assert abs(np.linalg.norm(psi) - 1.0) <= 1e-12


def _backend_under(value):
    env = dict(os.environ)
    env.pop("ARBQ_NO_NUMBA", None)
    if value is not None:
        env["ARBQ_NO_NUMBA"] = value
    out = subprocess.run(
        [sys.executable, "-c", "from arbq import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    return out.stdout.strip()


def test_env_flag_selects_backend():
    if not kernels.numba_available:
        pytest.skip("numba not importable")
    assert _backend_under(None) == "numba"
    assert _backend_under("0") == "numba"
    assert _backend_under("1") == "numpy"
    assert _backend_under("yes") == "numpy"


def test_get_backend_names():
    assert kernels.get_backend("numpy").__name__.endswith("_numpy")
    assert kernels.get_backend(None) is kernels.get_backend(kernels.BACKEND)
    with pytest.raises(ValueError):
        kernels.get_backend("cuda")
