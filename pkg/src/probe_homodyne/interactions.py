"""Probe-field interaction Hamiltonians in units of hbar g.

All five variants have the exchange form sigma^dag K + sigma K^dag for a
field operator K (two atoms share K = a with symmetric coupling).
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import BadSpace
from .opsalg import HilbertSpace, Operator, destroy, embed, sigma_minus


class Interaction(str, Enum):
    JC1 = "JC1"                        # sigma^dag a + sigma a^dag
    JC2 = "JC2"                        # sigma^dag a^2 + sigma a^dag^2
    TWO_ATOM_JC = "TwoAtomJC"          # (s1^dag + s2^dag) a + h.c.
    MODE_EXCHANGE_A = "ModeExchangeA"  # sigma^dag a1 a2^dag + h.c.
    MODE_SQUEEZE_B = "ModeSqueezeB"    # sigma^dag a1^dag a2^dag + h.c.

    @property
    def n_qubits(self) -> int:
        return 2 if self is Interaction.TWO_ATOM_JC else 1

    @property
    def n_modes(self) -> int:
        return 2 if self in (Interaction.MODE_EXCHANGE_A, Interaction.MODE_SQUEEZE_B) else 1


def _parse(spec) -> Interaction:
    try:
        return Interaction(spec)
    except ValueError:
        raise BadSpace(f"unknown interaction {spec!r}") from None


def field_operator(spec, space: HilbertSpace) -> Operator:
    """The field operator K that accompanies sigma^dag, lifted to ``space``."""
    kind = check_space(spec, space)
    nq = space.n_qubits
    a1 = embed(destroy(space.dims[nq]), space, nq)
    if kind in (Interaction.JC1, Interaction.TWO_ATOM_JC):
        return a1
    if kind is Interaction.JC2:
        return a1 @ a1
    a2 = embed(destroy(space.dims[nq + 1]), space, nq + 1)
    if kind is Interaction.MODE_EXCHANGE_A:
        return a1 @ a2.dag
    return a1.dag @ a2.dag


def check_space(spec, space: HilbertSpace) -> Interaction:
    kind = _parse(spec)
    if space.n_qubits != kind.n_qubits or len(space.mode_dims) != kind.n_modes:
        raise BadSpace(
            f"{kind.value} needs {kind.n_qubits} qubit(s) and {kind.n_modes} mode(s); "
            f"space has {space.n_qubits} and {len(space.mode_dims)}"
        )
    return kind


def build_interaction(spec, space: HilbertSpace) -> Operator:
    """Hermitian matrix of the interaction ``spec`` on ``space``.

    Raises:
        BadSpace: the space does not have the qubit/mode layout the variant needs.
    """
    kind = check_space(spec, space)
    k = field_operator(kind, space)
    sm = sigma_minus()
    h = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for q in range(kind.n_qubits):
        s = embed(sm, space, q)
        h += (s.dag @ k).entries
    h = h + h.conj().T
    return Operator(space, h)


def excitation_number(spec, space: HilbertSpace) -> Operator:
    """A number-type operator conserved by the variant (for property checks)."""
    kind = check_space(spec, space)
    sm = sigma_minus()
    nq = space.n_qubits
    ne = sum((embed(sm.dag @ sm, space, q) for q in range(nq)), Operator(space, np.zeros((space.total_dim,) * 2)))
    a1 = embed(destroy(space.dims[nq]), space, nq)
    n1 = a1.dag @ a1
    if kind in (Interaction.JC1, Interaction.TWO_ATOM_JC):
        return ne + n1
    if kind is Interaction.JC2:
        return 2 * ne + n1
    a2 = embed(destroy(space.dims[nq + 1]), space, nq + 1)
    n2 = a2.dag @ a2
    if kind is Interaction.MODE_EXCHANGE_A:
        return n1 + n2
    return n1 - n2
