"""Tour the rule DSL: parse, evaluate, validate, pretty-print.

Rules are ordered guarded clauses.  A group gets the first clause whose
condition it satisfies, as a probability distribution over action lists;
probabilities may be expressions over site-local proportions, so they can
change as the population moves.
"""

from __future__ import annotations

import pram

SOURCE = '''
# Toy weather model: sites dry out or get rained on.
rule weather {
  let wet = proportion(has_location, ground == "wet");

  when ground == "wet" {
    0.3 => set ground = "dry";
    0.7 => set ground = "wet";
  }
  when ground == "dry" {
    wet * 0.5 => set ground = "wet";
    1 - wet * 0.5 => set ground = "dry";
  }
}
'''


def main() -> None:
    schema = pram.ModelSchema(features=("ground",), relations=("has_location",), sites=("field",))
    rules = pram.parse_rules(SOURCE, schema)
    rule = rules["weather"]
    print(f"parsed rule {rule.name!r}: {len(rule.lets)} binding(s), {len(rule.clauses)} clause(s)")

    pop = pram.Population(schema, [
        pram.Group(pram.GroupSignature({"ground": "wet"}, {"has_location": "field"}), 40.0),
        pram.Group(pram.GroupSignature({"ground": "dry"}, {"has_location": "field"}), 60.0),
    ])
    dry = pop.groups[0] if pop.groups[0].signature.feature("ground") == "dry" else pop.groups[1]
    distribution = pram.evaluate_rule(rule, dry, pop)
    print("\ndistribution for the dry group (wet proportion is 0.4):")
    for probability, actions in distribution:
        rendered = ", ".join(f"{a.name}<-{a.value}" for a in actions)
        print(f"  {probability:g}: {rendered}")

    print("\nvalidator diagnostics on a sloppy ruleset:")
    sloppy = pram.parse_rules(
        'rule r {\n'
        '  when ground == "wet" { 1 => set ground = "dry"; }\n'
        '  when ground == "wet" { 0 => set ground = "wet"; 1 => set ground = "dry"; }\n'
        '}\n'
    )
    for diagnostic in pram.validate_ruleset(sloppy, schema):
        print(f"  {diagnostic}")

    print("\npretty-printed source (round-trips to an equal ruleset):")
    printed = pram.format_rules(rules)
    print("  " + "\n  ".join(printed.rstrip().splitlines()))
    assert pram.parse_rules(printed, schema) == rules


if __name__ == "__main__":
    main()
