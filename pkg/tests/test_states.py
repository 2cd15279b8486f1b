import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from probe_homodyne import states as st
from probe_homodyne.errors import BadParameter, ShapeMismatch, TruncationLeak
from probe_homodyne.opsalg import DensityOperator, expectation, number, partial_trace


def _mean_n(rho):
    return float(np.real(np.diag(rho.matrix)) @ np.arange(rho.dim))


def test_vacuum():
    rho = st.build_field(st.Fock(0), 10)
    assert rho.matrix[0, 0] == 1 and _mean_n(rho) == 0


def test_thermal_mean_and_diagonal():
    rho = st.build_field(st.Thermal(0.85), 40)
    assert _mean_n(rho) == pytest.approx(0.85, abs=1e-6)
    off = rho.matrix - np.diag(np.diag(rho.matrix))
    assert np.all(off == 0)


def test_thermal_records_leakage():
    rho = st.build_field(st.Thermal(2.9), 20)
    q = 2.9 / 3.9
    assert rho.meta["leakage"] == pytest.approx(q ** 20, rel=1e-10)


def test_coherent_coherence():
    # rho_01 = c_0 c_1^* = e^{-1/2} * e^{-1/2} alpha
    rho = st.build_field(st.Coherent(1.0), 40)
    assert rho.matrix[0, 1] == pytest.approx(math.exp(-1.0), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(hst.floats(0, 2.5), hst.floats(0, 2 * math.pi))
def test_coherent_mean_photon_number(mag, arg):
    alpha = mag * np.exp(1j * arg)
    n = int(math.ceil(mag ** 2 + 6 * mag + 10))
    rho = st.build_field(st.Coherent(alpha), n)
    assert expectation(rho, number(n)) == pytest.approx(mag ** 2, abs=10 * st.LEAKAGE_TOL)


def test_coherent_leak():
    with pytest.raises(TruncationLeak):
        st.build_field(st.Coherent(3.0), 10)


def test_squeezed_vacuum_even_support():
    rho = st.build_field(st.SqueezedVacuum(0.5, 0.2), 40)
    odd = rho.matrix[1::2, :]
    assert np.max(np.abs(odd)) == 0
    assert _mean_n(rho) == pytest.approx(math.sinh(0.5) ** 2, abs=1e-9)


def test_squeezed_leakage_threshold_is_adjustable():
    # r = 1 at N = 60 leaves ~1.2e-8 above the cutoff
    with pytest.raises(TruncationLeak):
        st.build_field(st.SqueezedVacuum(1.0), 60)
    rho = st.build_field(st.SqueezedVacuum(1.0), 60, leakage_tol=1e-7)
    assert 1e-8 < rho.meta["leakage"] < 1e-7


def test_cat_parity():
    even = st.build_field(st.Cat(1.0, 0.0), 30)
    odd = st.build_field(st.Cat(1.0, math.pi), 30)
    assert np.max(np.abs(even.matrix[1::2, :])) < 1e-14
    assert np.max(np.abs(odd.matrix[0::2, :])) < 1e-14


def test_tmsv_schmidt_and_reduced_thermal():
    r = 0.5
    rho = st.build_field(st.TwoModeSqueezedVacuum(r), 24)
    t = rho.matrix.reshape(24, 24, 24, 24)
    diag = np.array([t[n, n, n, n].real for n in range(6)])
    assert np.allclose(diag[1:] / diag[:-1], math.tanh(r) ** 2)
    red = partial_trace(rho, [0])
    ref = st.build_field(st.Thermal(math.sinh(r) ** 2), 24, leakage_tol=1e-6)
    assert np.max(np.abs(red.matrix - ref.matrix)) < 1e-8


def test_fock_superposition_and_product():
    rho = st.build_field(st.FockSuperposition({(1, 0): 1, (0, 1): 1}), 4)
    assert rho.space.dims == (4, 4)
    assert rho.matrix[np.ravel_multi_index((1, 0), (4, 4)), np.ravel_multi_index((0, 1), (4, 4))] == pytest.approx(0.5)
    prod = st.build_field(st.Product((st.Fock(1), st.Coherent(0.3))), 12)
    assert np.allclose(partial_trace(prod, [0]).matrix, st.build_field(st.Fock(1), 12).matrix)


def test_raw_matrix_text(tmp_path):
    text = "# dims: 2\n0 0 0.75 0\n1 1 0.25 0\n0 1 0.1 0.2\n1 0 0.1 -0.2\n"
    path = tmp_path / "rho.txt"
    path.write_text(text)
    raw = st.read_raw_matrix(path)
    rho = st.build_field(raw, 6)
    assert rho.matrix[0, 1] == pytest.approx(0.1 + 0.2j)
    assert rho.dim == 6 and rho.matrix[5, 5] == 0


def test_bad_parameters():
    with pytest.raises(BadParameter):
        st.build_field(st.Thermal(-1.0), 10)
    with pytest.raises(BadParameter):
        st.build_field(st.Coherent(float("nan")), 10)
    with pytest.raises(BadParameter):
        st.build_field(st.Fock(3), 1)


@settings(max_examples=20, deadline=None)
@given(hst.sampled_from([st.Fock(2), st.Coherent(0.7 - 0.2j), st.Thermal(0.4), st.SqueezedVacuum(0.3, 1.0),
                         st.Cat(0.8, 0.5)]), hst.integers(25, 40))
def test_factories_valid(spec, n):
    rho = st.build_field(spec, n)
    DensityOperator.from_matrix(rho.space, rho.matrix)  # revalidates


class TestProbes:
    def test_plus_zero(self):
        assert np.allclose(st.build_probe(st.PlusPhi(0)).matrix, 0.5)

    @pytest.mark.parametrize("phi", [0.0, 0.4, -2.0])
    def test_minus_is_shifted_plus(self, phi):
        a = st.build_probe(st.MinusPhi(phi)).matrix
        b = st.build_probe(st.PlusPhi(phi + math.pi)).matrix
        assert np.allclose(a, b)

    def test_psi_plus(self):
        m = st.build_probe(st.PsiPlus()).matrix
        # basis order |gg>, |ge>, |eg>, |ee>
        assert m[1, 1] == pytest.approx(0.5) and m[2, 2] == pytest.approx(0.5)
        assert np.linalg.matrix_rank(m) == 1

    def test_bell_phi(self):
        v = st.probe_vector(st.BellPhiPlus(0.3))
        assert abs(v[1]) == 0 and abs(v[2]) == 0
        assert np.linalg.norm(v) == pytest.approx(1.0)


class TestCompose:
    def test_basis_product(self):
        rho = st.compose(st.build_probe(st.Excited()), st.build_field(st.Fock(0), 4))
        e0 = np.ravel_multi_index((1, 0), (2, 4))
        assert rho.matrix[e0, e0] == 1 and np.trace(rho.matrix) == pytest.approx(1.0)

    def test_round_trip(self):
        f = st.random_field(6, seed=4)
        rho = st.compose(st.build_probe(st.PlusPhi(0.3)), f)
        assert np.max(np.abs(partial_trace(rho, [1]).matrix - f.matrix)) < 1e-12

    def test_rejects_probe_as_field(self):
        with pytest.raises(ShapeMismatch):
            st.compose(st.random_field(4), st.build_probe(st.Ground()))
