import math

import numpy as np
import pytest

from probe_homodyne import extraction as ex
from probe_homodyne import states as st
from probe_homodyne.errors import NegativeRate, NotProjector
from probe_homodyne.evolution import (
    LindbladSpec,
    PopulationSeries,
    analytic_difference_series,
    analytic_pe_plusphi,
    check_projector,
    lindblad_series,
    population_series,
    probe_projector,
)
from probe_homodyne.interactions import Interaction, build_interaction
from probe_homodyne.opsalg import HilbertSpace, Operator

GRID = np.linspace(-3, 3, 61)


def _jc1_series(field, probe, projector="excited", grid=GRID):
    rho0 = st.compose(st.build_probe(probe), field)
    h = build_interaction(Interaction.JC1, rho0.space)
    return population_series(rho0, h, probe_projector(projector, rho0.space), grid)


def test_vacuum_rabi_cos_squared():
    s = _jc1_series(st.build_field(st.Fock(0), 6), st.Excited())
    assert np.allclose(s.values, np.cos(GRID) ** 2, atol=1e-12)


def test_ground_vacuum_is_dark():
    s = _jc1_series(st.build_field(st.Fock(0), 6), st.Ground())
    assert np.max(s.values) < 1e-14


def test_plus_probe_at_zero_is_half():
    s = _jc1_series(st.random_field(10, seed=3), st.PlusPhi(0.7), grid=[0.0])
    assert s.values[0] == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("seed", range(3))
def test_analytic_matches_unitary_plus(seed):
    f = st.random_field(20, seed=seed)
    a = analytic_pe_plusphi(f, 0.4, GRID)
    u = _jc1_series(f, st.PlusPhi(0.4))
    assert np.max(np.abs(a.values - u.values)) < 1e-12


def _numeric_difference(field, proto):
    exp = ex.Experiment(field, grid=GRID)
    term = proto.terms[0]
    return exp.series(term.plus) - exp.series(term.minus), term.plus.probe.phase


@pytest.mark.parametrize("kind,make", [
    ("JC1_homodyne", lambda: ex.protocol_Y_homodyne(0.3)),
    ("JC2_homodyne", lambda: ex.protocol_squares_twophoton(0.3)[0]),
    ("TwoAtom", lambda: ex.protocol_squares_twoatom(0.3)[0]),
])
def test_analytic_difference_single_mode(kind, make):
    f = st.random_field(12, seed=11)
    num, phase = _numeric_difference(f, make())
    ana = analytic_difference_series(kind, f, phase, GRID)
    assert np.max(np.abs(num.values - ana.values)) < 1e-11


@pytest.mark.parametrize("kind,make", [
    ("ModeA", lambda: ex.protocol_A(0.2, -0.5)),
    ("ModeB", lambda: ex.protocol_B(0.2, -0.5)),
])
def test_analytic_difference_two_mode(kind, make):
    f = st.build_field(st.Product((st.Coherent(0.4 + 0.2j), st.Coherent(-0.3j))), 8, leakage_tol=1e-5)
    num, phase = _numeric_difference(f, make())
    ana = analytic_difference_series(kind, f, phase, GRID)
    assert np.max(np.abs(num.values - ana.values)) < 1e-11


def test_parity_between_rotated_probes():
    f = st.random_field(15, seed=5)
    plus = _jc1_series(f, st.PlusPhi(0.9))
    minus = _jc1_series(f, st.MinusPhi(0.9))
    assert np.allclose(plus.values[::-1], minus.values, atol=1e-12)


def test_difference_vanishes_at_zero():
    f = st.random_field(15, seed=6)
    d = _jc1_series(f, st.PlusPhi(1.1)) - _jc1_series(f, st.MinusPhi(1.1))
    assert d.signed and abs(d.values[GRID.size // 2]) < 1e-14


class TestLindblad:
    def setup_method(self):
        self.field = st.build_field(st.Coherent(0.6), 12)
        self.rho0 = st.compose(st.build_probe(st.PlusPhi(0.2)), self.field)
        self.h = build_interaction(Interaction.JC1, self.rho0.space)
        self.p = probe_projector("excited", self.rho0.space)
        self.grid = np.linspace(0, 1, 11)

    def test_zero_rates_match_unitary(self):
        a = lindblad_series(self.rho0, self.h, LindbladSpec(), self.p, self.grid)
        b = population_series(self.rho0, self.h, self.p, self.grid)
        assert np.max(np.abs(a.values - b.values)) < 1e-8

    def test_field_decay_damps_vacuum_rabi(self):
        rho0 = st.compose(st.build_probe(st.Excited()), st.build_field(st.Fock(0), 4))
        h = build_interaction(Interaction.JC1, rho0.space)
        p = probe_projector("excited", rho0.space)
        free = lindblad_series(rho0, h, LindbladSpec(), p, [0.0, 1.4])
        damped = lindblad_series(rho0, h, LindbladSpec(kappa=0.5), p, [0.0, 1.4])
        # near the first minimum the damped oscillation is shallower
        assert damped.values[1] > free.values[1]

    def test_dephasing_leaves_diagonal_state(self):
        rho0 = st.compose(st.build_probe(st.Excited()), st.build_field(st.Fock(1), 4))
        h = Operator(rho0.space, np.zeros((8, 8)))
        p = probe_projector("excited", rho0.space)
        s = lindblad_series(rho0, h, LindbladSpec(gamma_phi=0.3), p, self.grid)
        assert np.allclose(s.values, 1.0, atol=1e-12)

    def test_probe_decay(self):
        rho0 = st.compose(st.build_probe(st.Excited()), st.build_field(st.Fock(0), 3))
        h = Operator(rho0.space, np.zeros((6, 6)))
        p = probe_projector("excited", rho0.space)
        s = lindblad_series(rho0, h, LindbladSpec(gamma=0.2), p, self.grid)
        assert np.allclose(s.values, np.exp(-0.2 * self.grid), atol=1e-9)

    def test_negative_rate(self):
        with pytest.raises(NegativeRate):
            LindbladSpec(kappa=-0.1)

    def test_forward_only(self):
        with pytest.raises(ValueError):
            lindblad_series(self.rho0, self.h, LindbladSpec(), self.p, [-0.1, 0.0])


def test_csv_round_trip(tmp_path):
    s = _jc1_series(st.random_field(8, seed=2), st.PlusPhi(0.1))
    path = tmp_path / "s.csv"
    s.to_csv(path)
    back = PopulationSeries.from_csv(path)
    assert np.array_equal(back.tau, s.tau) and np.array_equal(back.values, s.values)
    assert back.projector == s.projector and back.provenance == "unitary"


def test_not_projector():
    sp = HilbertSpace.build(1, [3])
    with pytest.raises(NotProjector):
        check_projector(Operator(sp, 2 * np.eye(6)))
    with pytest.raises(NotProjector):
        probe_projector("sideways", sp)


def test_population_bounds_enforced():
    with pytest.raises(ValueError):
        PopulationSeries([0.0, 1.0], [0.5, 1.2], "excited", "unitary")
    PopulationSeries([0.0, 1.0], [-0.5, 1.2], "excited", "unitary", signed=True)


def test_leakage_alarm_metadata():
    f = st.build_field(st.Coherent(1.5), 8, leakage_tol=1e-2)
    with pytest.warns(UserWarning):
        s = _jc1_series(f, st.PlusPhi(0.0))
    assert s.metadata["leakage_alarm"] is True
    assert math.isfinite(s.metadata["max_top_population"])
