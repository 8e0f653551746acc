"""Walk through two iterations of the smallest interesting model.

One school (adams), 900 susceptible + 100 exposed agents in two groups.
Shows how a dynamic infection probability is computed, how jointly
applicable rules multiply out into potential groups, and how redistribution
conserves mass while the number of extant groups grows.
"""

from __future__ import annotations

import pram


def print_population(pop: pram.Population, label: str) -> None:
    print(f"\n{label}  (nu={pop.nu}, total mass={pop.total_mass():g})")
    for g in pop.groups:
        sig = g.signature
        print(
            f"  flu={sig.feature('flu')}  mood={sig.feature('mood'):8}"
            f"  at {sig.relation('has_location'):6}  mass={g.mass:.6g}"
        )


def main() -> None:
    pop = pram.load_population(pram.model_path("two_group.json"))
    rules = pram.parse_rules(pram.model_path("two_group.rules").read_text(), pop.schema)

    print_population(pop, "initial population")

    p = pop.proportion_at_site("adams", "has_location", [("flu", "e")])
    print(f"\ninfection probability at adams: 100 / (100 + 900) = {p}")

    # The exposed group sees both rules, so its mass fans out over the
    # cartesian product of their branches: 3 progression outcomes times 2
    # location outcomes.
    exposed = next(g for g in pop.groups if g.signature.feature("flu") == "e")
    potentials = pram.apply_rules_to_group(rules, exposed, pop)
    print(f"\npotential groups spawned by the exposed group ({len(potentials)}):")
    for pot in potentials:
        sig = pot.signature
        print(
            f"  flu={sig.feature('flu')}  mood={sig.feature('mood'):8}"
            f"  at {sig.relation('has_location'):6}  mass={pot.mass:g}"
        )

    pop1 = pram.step(pop, rules)
    print_population(pop1, "after iteration 1")

    # Iteration 2 re-evaluates the infection probability against the new
    # snapshot and promotes one more signature (susceptible agents at home,
    # from the recover-then-relapse path).
    pop2 = pram.step(pop1, rules)
    print_population(pop2, "after iteration 2")


if __name__ == "__main__":
    main()
