from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from fixtures import LAW, Z2, dependent_joint, m1, m2, ordered_k3, single_cell, tm, uniform_pzx
from clate.exceptions import DegenerateCellError, ModelValidationError, OrderedModelError
from clate.model import (
    ConflictWitness,
    FiniteModel,
    FlipWitness,
    JointModel,
    ResponseType,
    TypeMass,
    Verdict,
    check_conditional_independence,
    check_overlap,
    check_relevance,
    classify_monotonicity,
    monotone_conditional,
    monotone_unconditional,
    observable_joint,
    propensity_matrix,
)
from clate.simulate import DgpSpec, generate_model


def violated_model():
    return FiniteModel(
        Z2, ("a",), ("0", "1"), uniform_pzx("a", Z2),
        {"a": (tm((1, 1), "1/5"), tm((0, 1), "2/5"), tm((1, 0), "1/10"), tm((0, 0), "3/10"))},
    )


# ---- propensities


def test_m1_propensity_matches_hand_sum():
    pi = propensity_matrix(m1())
    assert pi.rows() == [[F(1, 5), F(7, 10)], [F(1, 10), F(2, 5)]]
    assert pi["z1", "a"] == F(7, 10)
    assert dict(oracles.propensity(m1())) == {(z, x): pi[z, x] for z in Z2 for x in "ab"}


def test_single_cell_propensity():
    pi = propensity_matrix(single_cell())
    assert (pi["z0", "a"], pi["z1", "a"]) == (F(3, 10), F(7, 10))


def test_all_never_takers_is_degenerate():
    model = FiniteModel(Z2, ("a",), ("0", "1"), uniform_pzx("a", Z2), {"a": (tm((0, 0), 1),)})
    with pytest.raises(DegenerateCellError) as err:
        propensity_matrix(model)
    assert err.value.cell == ("z0", "a")
    # the interior requirement can be lifted for construction work
    assert propensity_matrix(model, require_interior=False)["z0", "a"] == 0


def test_propensity_rejects_ordered():
    with pytest.raises(OrderedModelError):
        propensity_matrix(ordered_k3())


def test_entries_are_fractions_and_shares_sum_to_one():
    model = generate_model(DgpSpec(n_z=4, n_x=3, seed=5))
    pi = propensity_matrix(model, require_interior=False)
    assert all(isinstance(v, F) for v in pi.values.values())
    for x in model.x_support:
        assert sum(t.prob for t in model.types[x]) == 1


# ---- validation


def test_shares_must_sum_to_one():
    with pytest.raises(ModelValidationError):
        FiniteModel(Z2, ("a",), ("0",), uniform_pzx("a", Z2), {"a": (tm((0, 1), "1/2"),)})


def test_duplicate_labels_rejected():
    with pytest.raises(ModelValidationError):
        FiniteModel(("z", "z"), ("a",), ("0", "1"), {("a", "z"): 1}, {"a": (tm((0, 1), 1),)})


def test_floats_are_refused():
    with pytest.raises(TypeError):
        TypeMass(ResponseType((0, 1)), 0.5, LAW)


def test_cells_need_positive_mass():
    pzx = {("a", "z0"): F(1), ("a", "z1"): F(0)}
    with pytest.raises(ModelValidationError):
        FiniteModel(Z2, ("a",), ("0", "1"), pzx, {"a": (tm((0, 1), 1),)})


def test_treatment_maps_must_be_total():
    with pytest.raises(ModelValidationError):
        FiniteModel(Z2, ("a",), ("0", "1"), uniform_pzx("a", Z2), {"a": (tm((0,), 1),)})


def test_compliance_labels():
    assert ResponseType((1, 1)).compliance(0, 1) == "always-taker"
    assert ResponseType((0, 0)).compliance(0, 1) == "never-taker"
    assert ResponseType((0, 1)).compliance(0, 1) == "complier"
    assert ResponseType((1, 0)).compliance(0, 1) == "defier"


def test_overlap_and_relevance_on_m1():
    assert check_overlap(m1()) and check_relevance(m1())


def test_irrelevant_instrument_is_flagged():
    model = FiniteModel(Z2, ("a",), ("0", "1"), uniform_pzx("a", Z2),
                        {"a": (tm((1, 1), "1/2"), tm((0, 0), "1/2"))})
    res = check_relevance(model)
    assert not res and res.witness == ("a",)


# ---- monotonicity


def test_m1_is_global():
    v = classify_monotonicity(m1())
    assert v.verdict is Verdict.GLOBAL and v.witnesses == ()


def test_m2_is_local_only_with_flip_witness():
    v = classify_monotonicity(m2())
    assert v.verdict is Verdict.LOCAL_ONLY
    assert v.witnesses == (FlipWitness("z", "zp", "x", "xp"),)


def test_complier_and_defier_in_one_cell_is_violated():
    v = classify_monotonicity(violated_model())
    assert v.verdict is Verdict.VIOLATED
    assert v.witnesses[0] == ConflictWitness("z0", "z1", "a", ((1, 0), (0, 1)))


def test_zero_share_types_are_ignored():
    model = FiniteModel(Z2, ("a",), ("0", "1"), uniform_pzx("a", Z2),
                        {"a": (tm((1, 1), "1/2"), tm((0, 1), "1/2"), tm((1, 0), 0))})
    assert classify_monotonicity(model).is_global


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), cls=st.sampled_from(["GlobalMonotone", "LocalOnly", "Violated"]),
       n_z=st.integers(2, 4), n_x=st.integers(2, 3))
def test_verdict_matches_brute_force(seed, cls, n_z, n_x):
    model = generate_model(DgpSpec(n_z=n_z, n_x=n_x, model_class=cls, seed=seed))
    assert classify_monotonicity(model).verdict.value == oracles.verdict(model)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), cls=st.sampled_from(["GlobalMonotone", "LocalOnly", "Violated"]))
def test_unconditional_and_conditional_phrasings_agree(seed, cls):
    model = generate_model(DgpSpec(n_z=3, n_x=2, model_class=cls, seed=seed))
    assert monotone_unconditional(model) == monotone_conditional(model) == classify_monotonicity(model).is_global


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_global_models_never_have_opposite_propensity_signs(seed):
    model = generate_model(DgpSpec(n_z=4, n_x=3, seed=seed))
    pi = oracles.propensity(model)
    zs, xs = model.z_support, model.x_support
    for z in zs:
        for zp in zs:
            for x in xs:
                for xp in xs:
                    assert not oracles.strictly_opposite(pi, z, zp, x, xp)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), cls=st.sampled_from(["GlobalMonotone", "LocalOnly", "Violated"]),
       perm_seed=st.randoms(use_true_random=False))
def test_verdict_invariant_to_relabeling(seed, cls, perm_seed):
    model = generate_model(DgpSpec(n_z=3, n_x=2, model_class=cls, seed=seed))
    z_order = list(model.z_support)
    x_order = list(model.x_support)
    perm_seed.shuffle(z_order)
    perm_seed.shuffle(x_order)
    z_map = {z: f"Z_{z}" for z in z_order}
    x_map = {x: f"X_{x}" for x in x_order}
    relabeled = model.relabel(z_map, x_map, z_order, x_order)
    v0, v1 = classify_monotonicity(model), classify_monotonicity(relabeled)
    assert v0.verdict == v1.verdict
    for w in v1.witnesses:
        assert w.z.startswith("Z_") and w.x.startswith("X_")


# ---- conditional independence


def test_factored_models_are_independent():
    assert check_conditional_independence(m1())
    assert check_conditional_independence(m1().to_joint())


def test_dependent_joint_witness():
    res = check_conditional_independence(dependent_joint())
    assert not res
    assert res.witness == ("a", "z0", "z1", ("type", (0, 1)))


def test_outcome_dependence_is_caught_after_type_marginals():
    mass = {
        ("a", "z0", (0, 1), ("0", "0")): F(1, 4), ("a", "z0", (0, 1), ("0", "1")): F(1, 4),
        ("a", "z1", (0, 1), ("0", "0")): F(1, 2),
    }
    res = check_conditional_independence(JointModel(Z2, ("a",), ("0", "1"), mass))
    assert not res and res.witness[3][0] == "joint"


def test_joint_factor_round_trip():
    model = m1()
    assert model.to_joint().factor().to_joint() == model.to_joint()


def test_observable_joint_of_m1():
    obs = observable_joint(m1())
    # P(x=a, z=z1, d=1) = 1/4 * 7/10, all outcomes are "1" for the treated arm
    assert obs.prob["a", "z1", 1, "1"] == F(7, 40)
    assert sum(obs.prob.values()) == 1
