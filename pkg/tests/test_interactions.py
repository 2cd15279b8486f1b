import numpy as np
import pytest

from probe_homodyne.errors import BadSpace
from probe_homodyne.interactions import Interaction, build_interaction, excitation_number
from probe_homodyne.opsalg import HilbertSpace, commutator, destroy, embed, number

SPACES = {
    Interaction.JC1: HilbertSpace.build(1, [7]),
    Interaction.JC2: HilbertSpace.build(1, [7]),
    Interaction.TWO_ATOM_JC: HilbertSpace.build(2, [6]),
    Interaction.MODE_EXCHANGE_A: HilbertSpace.build(1, [4, 5]),
    Interaction.MODE_SQUEEZE_B: HilbertSpace.build(1, [4, 5]),
}


def _idx(space, *labels):
    return int(np.ravel_multi_index(labels, space.dims))


@pytest.mark.parametrize("kind", list(Interaction))
def test_hermitian_and_off_diagonal(kind):
    h = build_interaction(kind, SPACES[kind])
    assert h.hermiticity_error() <= 1e-12
    assert np.all(np.diag(h.entries) == 0)


def test_jc1_elements():
    sp = SPACES[Interaction.JC1]
    h = build_interaction(Interaction.JC1, sp).entries
    for n in range(6):
        assert h[_idx(sp, 1, n), _idx(sp, 0, n + 1)] == pytest.approx(np.sqrt(n + 1))
    assert np.count_nonzero(h) == 2 * 6


def test_jc2_elements():
    sp = SPACES[Interaction.JC2]
    h = build_interaction(Interaction.JC2, sp).entries
    for n in range(5):
        assert h[_idx(sp, 1, n), _idx(sp, 0, n + 2)] == pytest.approx(np.sqrt((n + 1) * (n + 2)))


def test_mode_exchange_elements():
    sp = SPACES[Interaction.MODE_EXCHANGE_A]
    h = build_interaction(Interaction.MODE_EXCHANGE_A, sp).entries
    for n1 in range(3):
        for n2 in range(1, 5):
            assert h[_idx(sp, 1, n1, n2), _idx(sp, 0, n1 + 1, n2 - 1)] == pytest.approx(np.sqrt((n1 + 1) * n2))


def test_mode_squeeze_elements():
    sp = SPACES[Interaction.MODE_SQUEEZE_B]
    h = build_interaction(Interaction.MODE_SQUEEZE_B, sp).entries
    assert h[_idx(sp, 1, 1, 1), _idx(sp, 0, 0, 0)] == pytest.approx(1.0)
    assert h[_idx(sp, 1, 2, 3), _idx(sp, 0, 1, 2)] == pytest.approx(np.sqrt(6))


def test_two_atom_symmetric():
    sp = SPACES[Interaction.TWO_ATOM_JC]
    h = build_interaction(Interaction.TWO_ATOM_JC, sp).entries
    # |g g 1> couples to |e g 0> and |g e 0> with equal strength
    assert h[_idx(sp, 1, 0, 0), _idx(sp, 0, 0, 1)] == pytest.approx(1.0)
    assert h[_idx(sp, 0, 1, 0), _idx(sp, 0, 0, 1)] == pytest.approx(1.0)


@pytest.mark.parametrize("kind", list(Interaction))
def test_conserved_quantity(kind):
    sp = SPACES[kind]
    c = commutator(build_interaction(kind, sp), excitation_number(kind, sp))
    assert c.max_abs() <= 1e-12


def test_exchange_conserves_mode_total():
    sp = SPACES[Interaction.MODE_EXCHANGE_A]
    total = embed(number(4), sp, 1) + embed(number(5), sp, 2)
    assert commutator(build_interaction(Interaction.MODE_EXCHANGE_A, sp), total).max_abs() <= 1e-12


def test_squeeze_breaks_total_number():
    sp = SPACES[Interaction.MODE_SQUEEZE_B]
    h = build_interaction(Interaction.MODE_SQUEEZE_B, sp)
    diff = embed(number(4), sp, 1) - embed(number(5), sp, 2)
    assert commutator(h, diff).max_abs() <= 1e-12
    total = embed(number(4), sp, 1) + embed(number(5), sp, 2)
    assert commutator(h, total).max_abs() > 0.5


@pytest.mark.parametrize("kind,space", [
    (Interaction.JC1, HilbertSpace.build(2, [5])),
    (Interaction.JC2, HilbertSpace.build(1, [5, 5])),
    (Interaction.TWO_ATOM_JC, HilbertSpace.build(1, [5])),
    (Interaction.MODE_EXCHANGE_A, HilbertSpace.build(1, [5])),
])
def test_bad_space(kind, space):
    with pytest.raises(BadSpace):
        build_interaction(kind, space)


def test_accepts_string_names():
    sp = SPACES[Interaction.JC1]
    assert np.array_equal(build_interaction("JC1", sp).entries, build_interaction(Interaction.JC1, sp).entries)


def test_truncation_is_hard():
    a = destroy(4).entries
    assert a.conj().T[3, 3] == 0 and np.count_nonzero(a.conj().T[:, 3]) == 0
