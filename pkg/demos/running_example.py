"""Belief intervals for the antibiotics knowledge base.

Run from the repository root:  python3 demos/running_example.py
"""

import pathlib

from alcp import Reasoner, load_kb, parse_concept
from alcp.context import TRUE, Var
from alcp.kbio import me_report

KB = pathlib.Path(__file__).resolve().parents[1] / "kbs" / "antibiotics.alcp"


def main():
    reasoner = Reasoner(load_kb(KB))
    print("maximum-entropy distribution")
    for w in me_report(reasoner)["worlds"]:
        assign = ", ".join(f"{v}={int(b)}" for v, b in w["assignment"].items())
        print(f"  {assign}:  {w['probability']:.6f}")

    queries = [
        ("some sf.inf", "some suc.ab", TRUE),
        ("some sf.strep", "some suc.ab", TRUE),
        ("some sf.strep", "some suc.ab", Var("h")),
    ]
    print("\nbelief intervals")
    for lhs, rhs, given in queries:
        r = reasoner.belief_interval(parse_concept(lhs), parse_concept(rhs), given)
        cond = "" if given == TRUE else f" | {given}"
        print(f"  {lhs} sqsubseteq {rhs}{cond}:  [{r.sceptical:.4f}, {r.credulous:.4f}]")

    strict = Reasoner(load_kb(KB), mode="strict")
    r = strict.belief_interval(parse_concept("some sf.strep"), parse_concept("some suc.ab"))
    print(f"\nstrict reading of strong non-subsumption: [{r.sceptical:.4f}, {r.credulous:.4f}]")


if __name__ == "__main__":
    main()
