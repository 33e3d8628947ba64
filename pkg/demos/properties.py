"""Invariance properties of maximum-entropy belief intervals on a small KB.

Run from the repository root:  python3 demos/properties.py
"""

from alcp import Reasoner, parse_concept, parse_kb

BIRDS = """
vars bird, penguin.
gci Penguin sqsubseteq Bird : true.
gci Bird sqsubseteq Flier : bird & !penguin.
gci Penguin sqsubseteq not Flier : penguin.
cond (penguin | bird) = 0.1.
prob (bird) in [0.6, 0.8].
"""

# the same constraints written with the conditional lowered to linear rows,
# and the last GCI in contrapositive form
BIRDS_LOWERED = """
vars bird, penguin.
gci Penguin sqsubseteq Bird : true.
gci Bird sqsubseteq Flier : bird & !penguin.
gci Flier sqsubseteq not Penguin : penguin.
linear P(penguin & bird) - 0.1*P(bird) >= 0.
linear 0.1*P(bird) - P(penguin & bird) >= 0.
prob (bird) in [0.6, 0.8].
"""

UNRELATED = """
vars rain.
gci Umbrella sqsubseteq Object : true.
prob (rain) = 0.3.
"""


def interval(text, extra=""):
    r = Reasoner(parse_kb(text + extra))
    return r.belief_interval(parse_concept("Penguin"), parse_concept("Flier")).interval


def main():
    base = interval(BIRDS)
    print(f"Penguin sqsubseteq Flier:            {base}")
    print(f"lowered and contrapositive variant:  {interval(BIRDS_LOWERED)}")
    extended = BIRDS.replace("vars bird, penguin.", "vars bird, penguin, unused.")
    print(f"with an unused context variable:     {interval(extended)}")
    merged = BIRDS.replace("vars bird, penguin.", "vars bird, penguin, rain.") + UNRELATED.replace("vars rain.", "")
    print(f"joined with an unrelated KB:         {interval(merged)}")


if __name__ == "__main__":
    main()
