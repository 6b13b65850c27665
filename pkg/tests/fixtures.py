"""Hand-built models shared across tests."""

from fractions import Fraction as F

from clate.model import FiniteModel, JointModel, OrderedModel, ResponseType, TypeMass

Z2 = ("z0", "z1")
LAW = ((("0", "1"), F(1)),)


def tm(treatment, prob, law=LAW):
    return TypeMass(ResponseType(treatment), F(prob), law)


def uniform_pzx(xs, zs):
    n = len(xs) * len(zs)
    return {(x, z): F(1, n) for x in xs for z in zs}


def m1() -> FiniteModel:
    """Two cells, threshold types only: AT/C/NT shares .2/.5/.3 at a and .1/.3/.6 at b."""
    return FiniteModel(
        Z2, ("a", "b"), ("0", "1"), uniform_pzx("ab", Z2),
        {
            "a": (tm((1, 1), "1/5"), tm((0, 1), "1/2"), tm((0, 0), "3/10")),
            "b": (tm((1, 1), "1/10"), tm((0, 1), "3/10"), tm((0, 0), "3/5")),
        },
    )


def m2() -> FiniteModel:
    """Compliers at x, defiers at x' (the crossing-propensity pattern)."""
    return FiniteModel(
        ("z", "zp"), ("x", "xp"), ("0", "1"), uniform_pzx(("x", "xp"), ("z", "zp")),
        {
            "x": (tm((1, 1), "3/10"), tm((0, 1), "3/10"), tm((0, 0), "2/5")),
            "xp": (tm((1, 1), "1/4"), tm((1, 0), "9/20"), tm((0, 0), "3/10")),
        },
    )


def single_cell() -> FiniteModel:
    return FiniteModel(
        Z2, ("a",), ("0", "1"), uniform_pzx("a", Z2),
        {"a": (tm((1, 1), "3/10"), tm((0, 1), "2/5"), tm((0, 0), "3/10"))},
    )


def ordered_k3() -> OrderedModel:
    """K = 3, one cell: shares .3 at (1,1), .4 at (1,2), .3 at (2,3)."""
    law = ((("0", "1", "1"), F(1)),)
    return OrderedModel(
        Z2, ("a",), ("0", "1"), uniform_pzx("a", Z2),
        {"a": (tm((1, 1), "3/10", law), tm((1, 2), "2/5", law), tm((2, 3), "3/10", law))},
        K=3,
    )


def dependent_joint() -> JointModel:
    """Type shares at x=a differ across z: compliers are more common under z1."""
    o = ("0", "1")
    mass = {
        ("a", "z0", (1, 1), o): F(1, 10), ("a", "z0", (0, 1), o): F(1, 5), ("a", "z0", (0, 0), o): F(1, 5),
        ("a", "z1", (1, 1), o): F(1, 20), ("a", "z1", (0, 1), o): F(1, 4), ("a", "z1", (0, 0), o): F(1, 5),
    }
    return JointModel(Z2, ("a",), ("0", "1"), mass)
