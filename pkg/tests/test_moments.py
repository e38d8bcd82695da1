import numpy as np
import pytest
from hypothesis import given, strategies as st

from wclimit import combinatorics as cb
from wclimit import moments as mo


def word(items, gram):
    return mo.VertexWord.from_tuples(items, np.asarray(gram, dtype=complex))


GRAM = np.array([[1.0, 0.3 + 0.1j], [0.3 - 0.1j, 0.5]])


def test_single_link():
    w = word([(1, 0, 0, 0), (0, 1, 0, 1)], GRAM)
    assert mo.vacuum_moment_partition(w) == pytest.approx(GRAM[1, 0])
    assert [str(p) for p in mo.admissible_partitions(w)] == ["12"]


def test_scattering_chain():
    # emission of f_0 at 1, scattering <g_0|f_0> at 2, absorption by g_1 at 3
    w = word([(1, 0, 0, 0), (1, 1, 0, 0), (0, 1, 0, 1)], GRAM)
    assert mo.vacuum_moment_partition(w) == pytest.approx(GRAM[0, 0] * GRAM[1, 0])


def test_two_pairs_sum():
    w = word([(1, 0, 0, 0), (1, 0, 1, 0), (0, 1, 0, 0), (0, 1, 0, 1)], GRAM)
    expect = GRAM[0, 0] * GRAM[1, 1] + GRAM[1, 0] * GRAM[0, 1]  # 13|24 and 14|23
    assert mo.vacuum_moment_partition(w) == pytest.approx(expect)
    assert mo.vacuum_moment_fock(w) == pytest.approx(expect)


def test_diagram_rules_match_admissible():
    rng = np.random.default_rng(3)
    for n in range(1, 7):
        for _ in range(5):
            w = mo.random_word(rng, n)
            a = sorted(p.parts for p in mo.admissible_partitions(w))
            b = sorted(p.parts for p in mo.diagram_rule_partitions(w))
            assert a == b


@given(st.integers(0, 10_000), st.integers(1, 6), st.booleans())
def test_three_evaluators_agree(seed, n, structured):
    w = mo.random_word(np.random.default_rng(seed), n, structured=structured)
    part = mo.vacuum_moment_partition(w)
    assert abs(part - mo.vacuum_moment_pule(w)) < 1e-12
    assert abs(part - mo.vacuum_moment_fock(w)) < 1e-10


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_adjoint_word_conjugates(seed, n):
    w = mo.random_word(np.random.default_rng(seed), n)
    assert abs(mo.vacuum_moment_partition(w.adjoint()) - np.conj(mo.vacuum_moment_partition(w))) < 1e-12


def test_callable_inner_product():
    w = mo.VertexWord.from_tuples([(1, 0, "f", "x"), (0, 1, "y", "g")], lambda g, f: 2.0 if (g, f) == ("g", "f") else 0)
    assert mo.vacuum_moment_partition(w) == 2.0


@pytest.mark.parametrize("order", range(0, 13))
@pytest.mark.parametrize("lam", [0.3, 1.0, 2.5])
def test_poisson_moments(order, lam):
    lhs, rhs = mo.poisson_moment_check(lam, order)
    assert abs(lhs - rhs) <= 1e-10 * lhs


def test_poisson_frozen():
    # E[N^3] for Poisson(1) is the Bell number B_3
    assert mo.poisson_moment_check(1.0, 3)[0] == cb.bell_number(3) == 5
