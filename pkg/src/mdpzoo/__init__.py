"""Constructed MDP families with exact verification tooling.

Subpackages and modules:

* `core` — 3-CNF formulas, gate circuits, nondeterministic Turing
  machines, and their direct evaluators (the independent oracles).
* `environments` — the six MDP families behind one step contract.
* `oracle` — exact dynamic programming (Q*, V*, argmax tables).
* `reductions` — problem <-> MDP decision routes, brute-force deciders.
* `acz` — constant-depth unbounded-fan-in circuit builders for models
  and optimal policies, with size/depth accounting.
* `mlp` — fixed-precision ReLU networks and the constructive builders
  for gates, lookup tables, models, and policies.
* `cli` — the `mdpzoo` command line front end.
"""

__version__ = "0.1.0"
