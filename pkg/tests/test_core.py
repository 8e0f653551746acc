from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pram import (
    ActionConflictError,
    EmptySiteError,
    Group,
    GroupSignature,
    ModelSchema,
    Population,
    RelationLookup,
    SchemaError,
    SetFeature,
    SetRelation,
    SiteLiteral,
    UnknownSiteError,
    apply_actions,
    apply_joint_actions,
    signature_equal,
)

SCHEMA = ModelSchema(features=("flu", "mood"), relations=("has_location",), sites=("adams", "home"))


def sig(flu: str, mood: str = "happy", loc: str = "adams") -> GroupSignature:
    return GroupSignature({"flu": flu, "mood": mood}, {"has_location": loc})


# -- schema -------------------------------------------------------------------


def test_schema_rejects_feature_relation_overlap():
    with pytest.raises(SchemaError):
        ModelSchema(features=("flu",), relations=("flu",))


def test_schema_rejects_duplicate_names():
    with pytest.raises(SchemaError):
        ModelSchema(features=("flu", "flu"), relations=())
    with pytest.raises(SchemaError):
        ModelSchema(features=(), relations=(), sites=("a", "a"))


def test_schema_kind_of():
    assert SCHEMA.kind_of("flu") == "feature"
    assert SCHEMA.kind_of("has_location") == "relation"
    with pytest.raises(SchemaError):
        SCHEMA.kind_of("age")


# -- signatures ---------------------------------------------------------------


def test_signature_equality_ignores_insertion_order():
    a = GroupSignature({"flu": "s", "mood": "happy"}, {"has_location": "adams"})
    b = GroupSignature({"mood": "happy", "flu": "s"}, {"has_location": "adams"})
    assert a == b
    assert signature_equal(a, b)
    assert hash(a) == hash(b)


def test_signature_inequality_on_any_attribute():
    base = sig("s")
    assert base != sig("e")
    assert base != sig("s", mood="bored")
    assert base != sig("s", loc="home")


def test_signature_accessors_and_membership():
    s = sig("s")
    assert s.feature("flu") == "s"
    assert s.relation("has_location") == "adams"
    assert s.has_feature("mood") and not s.has_feature("has_location")
    assert s.has_relation("has_location") and not s.has_relation("flu")
    with pytest.raises(SchemaError):
        s.feature("age")
    with pytest.raises(SchemaError):
        s.relation("has_school")


def test_signature_ordering_is_total_and_canonical():
    sigs = [sig("s"), sig("e"), sig("e", loc="home"), sig("e", mood="bored")]
    ordered = sorted(sigs)
    assert sorted(reversed(ordered)) == ordered
    assert ordered[0] < ordered[-1]


def test_signature_is_immutable():
    s = sig("s")
    with pytest.raises(AttributeError):
        s.anything = 1
    s.features["flu"] = "e"  # mutating the copy must not leak through
    assert s.feature("flu") == "s"


# -- groups -------------------------------------------------------------------


def test_group_rejects_negative_mass():
    with pytest.raises(ValueError):
        Group(sig("s"), -1.0)
    assert Group(sig("s"), 0.0).mass == 0.0


# -- actions ------------------------------------------------------------------


def test_apply_actions_overwrites_features_and_relations():
    out = apply_actions(sig("s"), (SetFeature("flu", "e"), SetRelation("has_location", SiteLiteral("home"))))
    assert out == sig("e", loc="home")


def test_apply_actions_is_pure():
    s = sig("s")
    apply_actions(s, (SetFeature("flu", "e"),))
    assert s == sig("s")


def test_relation_lookup_reads_the_input_signature():
    schema = ModelSchema(
        features=("flu",), relations=("has_location", "has_school"), sites=("adams", "home")
    )
    s = GroupSignature({"flu": "r"}, {"has_location": "home", "has_school": "adams"})
    out = apply_actions(s, (SetRelation("has_location", RelationLookup("has_school")),))
    assert out.relation("has_location") == "adams"
    assert schema.kind_of("has_school") == "relation"


def test_apply_actions_rejects_unknown_attributes():
    with pytest.raises(SchemaError):
        apply_actions(sig("s"), (SetFeature("age", "9"),))
    with pytest.raises(SchemaError):
        apply_actions(sig("s"), (SetRelation("has_school", SiteLiteral("adams")),))


def test_joint_actions_merge_independent_writes():
    out = apply_joint_actions(
        sig("s"),
        [(SetFeature("flu", "e"),), (SetRelation("has_location", SiteLiteral("home")),)],
    )
    assert out == sig("e", loc="home")


def test_joint_actions_allow_agreeing_writes():
    out = apply_joint_actions(sig("s"), [(SetFeature("flu", "e"),), (SetFeature("flu", "e"),)])
    assert out.feature("flu") == "e"


def test_joint_actions_conflict_is_an_error():
    with pytest.raises(ActionConflictError):
        apply_joint_actions(sig("s"), [(SetFeature("flu", "e"),), (SetFeature("flu", "r"),)])


def test_joint_conflict_compares_resolved_values():
    # site("adams") and rel(has_location) resolve to the same site here, so
    # the two writes agree even though they are spelled differently.
    out = apply_joint_actions(
        sig("s"),
        [
            (SetRelation("has_location", SiteLiteral("adams")),),
            (SetRelation("has_location", RelationLookup("has_location")),),
        ],
    )
    assert out.relation("has_location") == "adams"


# -- population ---------------------------------------------------------------


def test_population_merges_duplicate_signatures():
    pop = Population(SCHEMA, [Group(sig("s"), 1.0), Group(sig("s"), 2.5), Group(sig("e"), 4.0)])
    assert pop.nu == 2
    assert pop.group(sig("s")).mass == 3.5


def test_population_orders_groups_canonically():
    a, b = Group(sig("s"), 1.0), Group(sig("e"), 1.0)
    assert Population(SCHEMA, [a, b]).groups == Population(SCHEMA, [b, a]).groups


def test_population_requires_closed_schema():
    with pytest.raises(SchemaError):
        Population(SCHEMA, [Group(GroupSignature({"flu": "s"}, {"has_location": "adams"}), 1.0)])
    extra = GroupSignature({"flu": "s", "mood": "happy", "age": "9"}, {"has_location": "adams"})
    with pytest.raises(SchemaError):
        Population(SCHEMA, [Group(extra, 1.0)])


def test_population_rejects_unregistered_site_targets():
    with pytest.raises(UnknownSiteError):
        Population(SCHEMA, [Group(sig("s", loc="berry"), 1.0)])


def test_population_keeps_zero_mass_groups():
    pop = Population(SCHEMA, [Group(sig("s"), 0.0), Group(sig("e"), 5.0)])
    assert pop.nu == 2
    assert pop.total_mass() == 5.0


def test_groups_at_site_inverse_query():
    pop = Population(SCHEMA, [Group(sig("s"), 9.0), Group(sig("e"), 1.0), Group(sig("r", loc="home"), 2.0)])
    at_adams = pop.groups_at_site("adams", "has_location")
    assert {g.signature.feature("flu") for g in at_adams} == {"s", "e"}
    assert pop.groups_at_site("home", "has_location")[0].mass == 2.0
    with pytest.raises(UnknownSiteError):
        pop.groups_at_site("berry", "has_location")


def test_proportion_at_site_exact_division():
    pop = Population(SCHEMA, [Group(sig("s"), 900.0), Group(sig("e"), 100.0)])
    assert pop.proportion_at_site("adams", "has_location", [("flu", "e")]) == 0.1


def test_proportion_with_empty_predicate_is_one():
    pop = Population(SCHEMA, [Group(sig("s"), 2.0)])
    assert pop.proportion_at_site("adams", "has_location") == 1.0


def test_proportion_over_empty_site_raises():
    pop = Population(SCHEMA, [Group(sig("s"), 2.0)])
    with pytest.raises(EmptySiteError):
        pop.proportion_at_site("home", "has_location", [("flu", "e")])


def test_proportion_conjunctive_predicate():
    pop = Population(
        SCHEMA,
        [Group(sig("e", mood="bored"), 30.0), Group(sig("e"), 20.0), Group(sig("s"), 50.0)],
    )
    got = pop.proportion_at_site("adams", "has_location", [("flu", "e"), ("mood", "bored")])
    assert got == 0.3


def test_mass_at_site():
    pop = Population(SCHEMA, [Group(sig("s"), 9.0), Group(sig("e", loc="home"), 1.0)])
    assert pop.mass_at_site("adams", "has_location") == 9.0
    assert pop.mass_at_site("home", "has_location") == 1.0


def test_population_equality_and_iteration_index():
    a = Population(SCHEMA, [Group(sig("s"), 1.0)])
    b = Population(SCHEMA, [Group(sig("s"), 1.0)])
    c = Population(SCHEMA, [Group(sig("s"), 1.0)], iteration=3)
    assert a == b
    assert a != c
    assert c.iteration == 3


def test_population_is_immutable():
    pop = Population(SCHEMA, [Group(sig("s"), 1.0)])
    with pytest.raises(AttributeError):
        pop.iteration = 5


# -- properties ---------------------------------------------------------------

masses = st.lists(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
    min_size=1,
    max_size=12,
)
states = st.lists(st.sampled_from(["s", "e", "r"]), min_size=1, max_size=12)


@given(states=states, weights=masses)
def test_constructor_merge_preserves_total_mass(states, weights):
    n = min(len(states), len(weights))
    groups = [Group(sig(states[i]), weights[i]) for i in range(n)]
    pop = Population(SCHEMA, groups)
    by_state: dict[str, float] = {}
    for i in range(n):
        by_state[states[i]] = by_state.get(states[i], 0.0) + weights[i]
    assert pop.nu == len(by_state)
    for state, total in by_state.items():
        assert pop.group(sig(state)).mass == pytest.approx(total, rel=1e-12, abs=0.0)


@given(states=states, weights=masses)
def test_proportions_are_bounded(states, weights):
    n = min(len(states), len(weights))
    pop = Population(SCHEMA, [Group(sig(states[i]), weights[i]) for i in range(n)])
    if pop.mass_at_site("adams", "has_location") == 0.0:
        return
    p = pop.proportion_at_site("adams", "has_location", [("flu", "e")])
    assert 0.0 <= p <= 1.0
