"""Anytime snapshots: the outer interval tightens as worlds are processed.

Run from the repository root:  python3 demos/anytime.py
"""

import pathlib

from alcp import Reasoner, load_kb, parse_concept

KB = pathlib.Path(__file__).resolve().parents[1] / "kbs" / "antibiotics.alcp"


def main():
    reasoner = Reasoner(load_kb(KB))
    c, d = parse_concept("some sf.strep"), parse_concept("some suc.ab")
    for order in ("prob", "index"):
        print(f"order = {order}")
        for snap in reasoner.belief_stream(c, d, order=order):
            o = snap.outer
            print(f"  {snap.processed} worlds  [{o.lower:.5f}, {o.upper:.5f}]  width {o.width:.5f}")
        print(f"  final {snap.result.interval}\n")


if __name__ == "__main__":
    main()
