import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from ncqm.exact_algebra import GaussianRational, ThetaPoly
from ncqm.poisson import PoissonBivector, constant_bivector, fuzzy_sphere_bivector
from ncqm.exact_algebra import parse_polynomial


def seeded_poly(rng: random.Random, n: int, degree: int = 3, terms: int = 5,
                trunc: int = 3, height: int = 3, momenta: bool = False) -> ThetaPoly:
    """Deterministic random polynomial of bounded degree and coefficient height."""
    p = ThetaPoly.zero(n, trunc, momenta)
    for _ in range(terms):
        ce = [0] * n
        me = [0] * n
        for _ in range(rng.randint(0, degree)):
            slot = rng.randrange(2 * n if momenta else n)
            if slot < n:
                ce[slot] += 1
            else:
                me[slot - n] += 1
        c = GaussianRational(Fraction(rng.randint(-height, height)),
                             Fraction(rng.randint(-height, height)))
        p = p + ThetaPoly(n, {(0, tuple(ce), tuple(me)): c}, trunc, momenta)
    return p


@pytest.fixture
def rng():
    return random.Random(20240817)


@pytest.fixture(scope="session")
def fuzzy():
    return fuzzy_sphere_bivector()


@pytest.fixture(scope="session")
def quad2d():
    return PoissonBivector(2, {(0, 1): parse_polynomial("x1*x2", 2)})


@pytest.fixture(scope="session")
def const3d():
    return constant_bivector([[0, 1, -2], [-1, 0, 3], [2, -3, 0]])


# hypothesis strategies -------------------------------------------------------

small_fractions = st.fractions(
    min_value=-4, max_value=4, max_denominator=4)

scalars = st.builds(GaussianRational, small_fractions, small_fractions)


def poly_strategy(n: int, momenta: bool = False, max_terms: int = 4,
                  max_degree: int = 2, trunc: int = 3):
    def build(term_list):
        p = ThetaPoly.zero(n, trunc, momenta)
        for t, exps, c in term_list:
            ce = [0] * n
            me = [0] * n
            for slot in exps:
                if slot < n:
                    ce[slot] += 1
                else:
                    me[slot - n] += 1
            p = p + ThetaPoly(n, {(t, tuple(ce), tuple(me)): c}, trunc, momenta)
        return p

    slot_range = 2 * n if momenta else n
    term = st.tuples(
        st.integers(min_value=0, max_value=2),
        st.lists(st.integers(min_value=0, max_value=slot_range - 1),
                 max_size=max_degree),
        scalars,
    )
    return st.lists(term, max_size=max_terms).map(build)
