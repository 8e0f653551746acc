"""Groups, sites, signatures, and the relational query layer.

A population is a set of groups, each pairing an immutable *signature*
(discrete feature values plus relations to named sites) with a real-valued
mass.  Populations are immutable snapshots: stepping a model builds the next
population rather than mutating the current one, so any number of readers may
query a snapshot concurrently.

Attribute values and site names are plain strings compared exactly; there is
no numeric coercion anywhere in the signature layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ActionConflictError, EmptySiteError, SchemaError, UnknownSiteError

__all__ = [
    "ModelSchema",
    "GroupSignature",
    "Group",
    "Population",
    "SetFeature",
    "SetRelation",
    "SiteLiteral",
    "RelationLookup",
    "signature_equal",
    "apply_actions",
    "apply_joint_actions",
]


@dataclass(frozen=True)
class ModelSchema:
    """The closed attribute schema of one model.

    Every group in a population carries exactly these feature and relation
    names; the two name sets must be disjoint so that a bare identifier in
    rule text is unambiguous.
    """

    features: tuple[str, ...]
    relations: tuple[str, ...]
    sites: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "sites", tuple(self.sites))
        overlap = set(self.features) & set(self.relations)
        if overlap:
            raise SchemaError(f"names declared both feature and relation: {sorted(overlap)}")
        for kind, names in (("feature", self.features), ("relation", self.relations), ("site", self.sites)):
            if len(set(names)) != len(names):
                raise SchemaError(f"duplicate {kind} names in schema")

    def kind_of(self, name: str) -> str:
        """'feature' or 'relation'; SchemaError if the name is not declared."""
        if name in self.features:
            return "feature"
        if name in self.relations:
            return "relation"
        raise SchemaError(f"unknown attribute {name!r}")


class GroupSignature:
    """An immutable (features, relations) pair identifying a group.

    Two signatures are equal iff both mappings are element-wise equal.
    Signatures order lexicographically by their name-sorted items, which
    gives every population a canonical group order.
    """

    __slots__ = ("_features", "_relations", "_key", "_hash")

    def __init__(self, features: Mapping[str, str], relations: Mapping[str, str]):
        feats = tuple(sorted(features.items()))
        rels = tuple(sorted(relations.items()))
        object.__setattr__(self, "_features", dict(feats))
        object.__setattr__(self, "_relations", dict(rels))
        object.__setattr__(self, "_key", (feats, rels))
        object.__setattr__(self, "_hash", hash((feats, rels)))

    def __setattr__(self, name, value):
        raise AttributeError("GroupSignature is immutable")

    @property
    def features(self) -> Mapping[str, str]:
        return dict(self._features)

    @property
    def relations(self) -> Mapping[str, str]:
        return dict(self._relations)

    def feature(self, name: str) -> str:
        try:
            return self._features[name]
        except KeyError:
            raise SchemaError(f"signature has no feature {name!r}") from None

    def relation(self, name: str) -> str:
        try:
            return self._relations[name]
        except KeyError:
            raise SchemaError(f"signature has no relation {name!r}") from None

    def has_feature(self, name: str) -> bool:
        return name in self._features

    def has_relation(self, name: str) -> bool:
        return name in self._relations

    @property
    def sort_key(self):
        return self._key

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupSignature):
            return NotImplemented
        return self._key == other._key

    def __lt__(self, other) -> bool:
        if not isinstance(other, GroupSignature):
            return NotImplemented
        return self._key < other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        feats = ", ".join(f"{k}={v}" for k, v in self._key[0])
        rels = ", ".join(f"{k}={v}" for k, v in self._key[1])
        return f"{{{feats} | {rels}}}"


def signature_equal(a: GroupSignature, b: GroupSignature) -> bool:
    """True iff the feature and relation mappings are element-wise equal."""
    return a == b


@dataclass(frozen=True)
class Group:
    """A signature plus the non-negative mass (agent count) it stands for."""

    signature: GroupSignature
    mass: float

    def __post_init__(self):
        if not (self.mass >= 0.0):
            raise ValueError(f"group mass must be non-negative, got {self.mass}")


# ---------------------------------------------------------------------------
# Actions: the primitive signature rewrites rules are built from.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SiteLiteral:
    """A relation target naming a site directly, e.g. site("home")."""

    name: str


@dataclass(frozen=True)
class RelationLookup:
    """A relation target that copies the group's current value of another
    relation, e.g. rel(has_school)."""

    relation: str


SiteRef = SiteLiteral | RelationLookup


@dataclass(frozen=True)
class SetFeature:
    name: str
    value: str


@dataclass(frozen=True)
class SetRelation:
    name: str
    target: SiteRef


Action = SetFeature | SetRelation
ActionList = tuple[Action, ...]


def _resolve(sig: GroupSignature, actions: Iterable[Action]) -> dict[str, tuple[str, str]]:
    """Resolve actions against ``sig`` into {attr: (kind, new value)}.

    All targets are read from the input signature, never from intermediate
    state: the actions of one list apply jointly.
    """
    out: dict[str, tuple[str, str]] = {}
    for action in actions:
        if isinstance(action, SetFeature):
            if not sig.has_feature(action.name):
                raise SchemaError(f"signature has no feature {action.name!r}")
            out[action.name] = ("feature", action.value)
        else:
            if not sig.has_relation(action.name):
                raise SchemaError(f"signature has no relation {action.name!r}")
            target = action.target
            if isinstance(target, SiteLiteral):
                out[action.name] = ("relation", target.name)
            else:
                out[action.name] = ("relation", sig.relation(target.relation))
    return out


def _rewrite(sig: GroupSignature, resolved: Mapping[str, tuple[str, str]]) -> GroupSignature:
    if not resolved:
        return sig
    feats = dict(sig._features)  # noqa: SLF001 - same-module fast path
    rels = dict(sig._relations)
    for name, (kind, value) in resolved.items():
        if kind == "feature":
            feats[name] = value
        else:
            rels[name] = value
    return GroupSignature(feats, rels)


def apply_actions(sig: GroupSignature, actions: Sequence[Action]) -> GroupSignature:
    """Return a new signature with each named attribute overwritten.

    Pure: the input signature is never modified.  ``rel(x)`` targets read the
    input signature's value of ``x``, so an action list cannot observe its own
    writes.  Naming an attribute absent from the signature raises SchemaError.
    """
    return _rewrite(sig, _resolve(sig, actions))


def apply_joint_actions(sig: GroupSignature, lists: Sequence[Sequence[Action]]) -> GroupSignature:
    """Apply several independently chosen action lists as one joint rewrite.

    Each list is resolved against the *source* signature (rules act
    independently; none observes another's writes).  Two lists setting the
    same attribute to different resolved values raise ActionConflictError;
    agreeing writes are allowed.
    """

    merged: dict[str, tuple[str, str]] = {}
    for actions in lists:
        for name, resolved in _resolve(sig, actions).items():
            prior = merged.get(name)
            if prior is not None and prior != resolved:
                raise ActionConflictError(
                    f"conflicting writes to {name!r}: {prior[1]!r} vs {resolved[1]!r}"
                )
            merged[name] = resolved
    return _rewrite(sig, merged)


# ---------------------------------------------------------------------------
# Population
# ---------------------------------------------------------------------------


class Population:
    """An immutable snapshot: extant groups, the site registry, a time index.

    Groups are stored in canonical signature order and duplicate signatures
    are merged (masses summed) at construction, so the canonical-form
    invariant holds for any population however it was built.
    """

    __slots__ = ("schema", "sites", "groups", "iteration", "_by_signature", "_site_index")

    def __init__(
        self,
        schema: ModelSchema,
        groups: Iterable[Group],
        sites: Iterable[str] | None = None,
        iteration: int = 0,
    ):
        site_tuple = tuple(sorted(sites)) if sites is not None else tuple(schema.sites)
        if len(set(site_tuple)) != len(site_tuple):
            raise SchemaError("duplicate site names")
        merged: dict[GroupSignature, float] = {}
        for g in groups:
            self._check_schema(schema, g.signature, site_tuple)
            merged[g.signature] = merged.get(g.signature, 0.0) + g.mass
        ordered = tuple(Group(sig, merged[sig]) for sig in sorted(merged))

        site_index: dict[tuple[str, str], list[Group]] = {}
        for g in ordered:
            for rel, site in g.signature.relations.items():
                site_index.setdefault((site, rel), []).append(g)

        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "sites", site_tuple)
        object.__setattr__(self, "groups", ordered)
        object.__setattr__(self, "iteration", iteration)
        object.__setattr__(self, "_by_signature", {g.signature: g for g in ordered})
        object.__setattr__(self, "_site_index", site_index)

    def __setattr__(self, name, value):
        raise AttributeError("Population is immutable")

    @staticmethod
    def _check_schema(schema: ModelSchema, sig: GroupSignature, sites: tuple[str, ...]) -> None:
        if tuple(sorted(sig.features)) != tuple(sorted(schema.features)):
            raise SchemaError(
                f"group features {sorted(sig.features)} do not match schema {sorted(schema.features)}"
            )
        if tuple(sorted(sig.relations)) != tuple(sorted(schema.relations)):
            raise SchemaError(
                f"group relations {sorted(sig.relations)} do not match schema {sorted(schema.relations)}"
            )
        for rel, site in sig.relations.items():
            if site not in sites:
                raise UnknownSiteError(f"relation {rel!r} targets unregistered site {site!r}")

    # -- queries ------------------------------------------------------------

    def __iter__(self) -> Iterator[Group]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def nu(self) -> int:
        """Number of extant groups (zero-mass groups included)."""
        return len(self.groups)

    def total_mass(self) -> float:
        return sum(g.mass for g in self.groups)

    def masses(self) -> dict[GroupSignature, float]:
        return {g.signature: g.mass for g in self.groups}

    def group(self, sig: GroupSignature) -> Group | None:
        return self._by_signature.get(sig)

    def _require_site(self, site: str) -> None:
        if site not in self.sites:
            raise UnknownSiteError(f"site {site!r} is not registered")

    def groups_at_site(self, site: str, relation: str) -> tuple[Group, ...]:
        """Inverse relation query: the extant groups whose ``relation`` is
        ``site``, in canonical order.  Empty if none."""
        self._require_site(site)
        return tuple(self._site_index.get((site, relation), ()))

    def proportion_at_site(
        self,
        site: str,
        relation: str,
        predicate: Sequence[tuple[str, str]] = (),
    ) -> float:
        """Mass fraction of the groups at ``site`` (via ``relation``) whose
        features satisfy every (name, value) conjunct.

        An empty predicate is vacuously true of every group, so the result is
        then 1.  A site holding zero total mass raises EmptySiteError: a
        proportion over an empty site is undefined and models must avoid
        querying one.
        """
        here = self.groups_at_site(site, relation)
        denom = sum(g.mass for g in here)
        if denom == 0.0:
            raise EmptySiteError(f"no mass at site {site!r} (relation {relation!r})")
        num = 0.0
        for g in here:
            if all(g.signature.feature(name) == value for name, value in predicate):
                num += g.mass
        return num / denom

    def mass_at_site(self, site: str, relation: str) -> float:
        self._require_site(site)
        return sum(g.mass for g in self._site_index.get((site, relation), ()))

    # -- equality (used by tests and the fixed-point contract) ---------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Population):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.sites == other.sites
            and self.iteration == other.iteration
            and self.masses() == other.masses()
        )

    def __repr__(self) -> str:
        return f"Population(nu={self.nu}, total_mass={self.total_mass()!r}, iteration={self.iteration})"
