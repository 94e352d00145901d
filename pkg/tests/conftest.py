from fractions import Fraction

import pytest

from weiljets.poly import parse_polynomial


def P(text, n, bound=None):
    return parse_polynomial(text, n, bound)


def Q(value):
    return Fraction(value)


@pytest.fixture
def parse():
    return P
