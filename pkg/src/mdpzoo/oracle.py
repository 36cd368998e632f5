"""Exact finite-horizon dynamic programming over the reachable state graph.

Values are exact rationals end to end; there is no floating point here.
Two interchangeable engines sit behind `exact_dp`:

* a generic engine over Fractions, used whenever transitions are
  stochastic, and
* an integer engine for deterministic families, which rescales rewards by
  their common denominator (2 here, for the 1/2 give-up reward) and runs
  backward induction on numpy int64 arrays.  Integer arithmetic is exact,
  so both engines produce identical tables; a test pins that down.

Because every family is time-homogeneous, the transition graph is built
once over the union of the reachable layers and reused by every horizon
step.  Argmax ties break toward the smallest action under the family's
action order.
"""

import csv
import io
import json
import math
import os
import random
from fractions import Fraction

import numpy as np

from mdpzoo.errors import InvalidPolicyError, ResourceLimitError

DEFAULT_CEILING = 5_000_000


def state_ceiling(explicit=None):
    """Reachable-state ceiling: explicit arg, else MDPZOO_CEILING_STATES."""
    if explicit is not None:
        return explicit
    return int(os.environ.get("MDPZOO_CEILING_STATES", DEFAULT_CEILING))


class _Graph:
    """Reachable states of a family plus the dense transition tables.

    Layer h (0-based index h-1) holds exactly the states reachable from
    the initial state in h-1 steps, so the successors of layer h members
    are exactly layer h+1.
    """

    def __init__(self, family, horizon, ceiling):
        actions = tuple(family.actions(family.initial_state()))
        index = {}
        states = []
        rewards = []  # rewards[i][j] for state i, action j
        succ = []  # succ[i][j] = tuple of (state index, probability)
        depth_now = 1

        def intern(state):
            key = family.state_key(state)
            idx = index.get(key)
            if idx is None:
                idx = len(states)
                if idx >= ceiling:
                    raise ResourceLimitError(
                        f"reachable state count exceeded ceiling {ceiling}",
                        layer=depth_now,
                    )
                index[key] = idx
                states.append(state)
                rewards.append(None)
                succ.append(None)
            return idx

        s0 = family.initial_state()
        layers = [[intern(s0)]]
        frontier = layers[0]
        for depth in range(2, horizon + 1):
            depth_now = depth
            next_frontier = []
            seen_next = set()
            for i in frontier:
                if succ[i] is None:
                    state = states[i]
                    row_r = []
                    row_s = []
                    for a in actions:
                        outcome = family.step(state, a)
                        row_r.append(outcome.reward)
                        row_s.append(
                            tuple((intern(s2), p) for s2, p in outcome.successors)
                        )
                    rewards[i] = row_r
                    succ[i] = row_s
                for row in succ[i]:
                    for j, _p in row:
                        if j not in seen_next:
                            seen_next.add(j)
                            next_frontier.append(j)
            layers.append(next_frontier)
            frontier = next_frontier
        # States first reached at the terminal layer only ever contribute
        # their reward row; the self-loop placeholder keeps the arrays
        # rectangular and is never consumed by backward induction.
        for i in frontier:
            if succ[i] is None:
                state = states[i]
                rewards[i] = [family.step(state, a).reward for a in actions]
                succ[i] = [((i, 1),)] * len(actions)
        self.family = family
        self.horizon = horizon
        self.actions = actions
        self.states = states
        self.rewards = rewards
        self.succ = succ
        self.layers = layers

    @property
    def deterministic(self):
        return all(
            all(len(dist) == 1 and dist[0][1] == 1 for dist in row)
            for row in self.succ
        )


class DpSolution:
    """Optimal Q/V/argmax tables per horizon step over the reachable graph.

    Layer h (1-based) covers exactly the states reachable in h-1 steps.
    All accessors return exact values (ints or Fractions).
    """

    def __init__(self, graph, v_tables, q_tables, pi_tables):
        self._graph = graph
        self._v = v_tables  # list over h of {state index: value}
        self._q = q_tables  # list over h of {state index: tuple of values}
        self._pi = pi_tables  # list over h of {state index: action}
        self._keymap = None
        self.horizon = graph.horizon
        self.actions = graph.actions

    def _lookup(self, state):
        if self._keymap is None:
            fam = self._graph.family
            self._keymap = {
                fam.state_key(st): i for i, st in enumerate(self._graph.states)
            }
        return self._keymap[self._graph.family.state_key(state)]

    def value(self, h, state):
        return self._v[h - 1][self._lookup(state)]

    def q_value(self, h, state, action):
        return self._q[h - 1][self._lookup(state)][self.actions.index(action)]

    def policy_action(self, h, state):
        return self._pi[h - 1][self._lookup(state)]

    def start_state(self):
        return self._graph.states[self._graph.layers[0][0]]

    def start_value(self):
        return self._v[0][self._graph.layers[0][0]]

    def start_q(self):
        return dict(zip(self.actions, self._q[0][self._graph.layers[0][0]]))

    def start_policy_action(self):
        return self._pi[0][self._graph.layers[0][0]]

    def layer_states(self, h):
        return [self._graph.states[i] for i in self._graph.layers[h - 1]]

    def reachable_count(self):
        return len(self._graph.states)


def enumerate_reachable(family, horizon=None, ceiling=None):
    """Layered reachable sets: layer h holds the states reachable from the
    initial state in exactly h-1 steps (any action / branch sequence)."""
    horizon = family.horizon if horizon is None else horizon
    if horizon < 1:
        raise ResourceLimitError("horizon must be at least 1")
    graph = _Graph(family, horizon, state_ceiling(ceiling))
    return [[graph.states[i] for i in layer] for layer in graph.layers]


def exact_dp(family, horizon=None, ceiling=None, engine=None):
    """Backward induction with exact arithmetic; returns a DpSolution.

    Q_h(s,a) = r(s,a) + sum_s' P(s'|s,a) V_{h+1}(s'), with V_{H+1} = 0, so
    the terminal layer is pure reward.
    """
    horizon = family.horizon if horizon is None else horizon
    if horizon < 1:
        raise ResourceLimitError("horizon must be at least 1")
    graph = _Graph(family, horizon, state_ceiling(ceiling))
    if engine is None:
        engine = "int" if graph.deterministic else "fraction"
    if engine == "int":
        if not graph.deterministic:
            raise ValueError("integer engine requires deterministic transitions")
        return _dp_int(graph)
    if engine == "fraction":
        return _dp_fraction(graph)
    raise ValueError(f"unknown engine {engine!r}")


def _dp_int(graph):
    """Deterministic engine: scaled-integer backward induction on arrays."""
    scale = 1
    for row in graph.rewards:
        for r in row:
            if isinstance(r, Fraction):
                scale = math.lcm(scale, r.denominator)
    m = len(graph.states)
    n_actions = len(graph.actions)
    reward_arr = np.empty((m, n_actions), dtype=np.int64)
    succ_arr = np.empty((m, n_actions), dtype=np.int64)
    for i in range(m):
        row_r = graph.rewards[i]
        row_s = graph.succ[i]
        for j in range(n_actions):
            reward_arr[i, j] = int(row_r[j] * scale)
            succ_arr[i, j] = row_s[j][0][0]

    horizon = graph.horizon
    all_v = [None] * horizon
    all_q = [None] * horizon
    all_pi = [None] * horizon
    v_next = None
    rows = np.arange(m)
    for h in range(horizon, 0, -1):
        q = reward_arr if v_next is None else reward_arr + v_next[succ_arr]
        pi_idx = np.argmax(q, axis=1)  # first occurrence = smallest action
        v = q[rows, pi_idx]
        all_q[h - 1], all_pi[h - 1], all_v[h - 1] = q, pi_idx, v
        v_next = v

    def unscale(x):
        return Fraction(int(x), scale) if scale != 1 else int(x)

    v_tables, q_tables, pi_tables = [], [], []
    for h in range(1, horizon + 1):
        members = graph.layers[h - 1]
        q = all_q[h - 1]
        v_tables.append({i: unscale(all_v[h - 1][i]) for i in members})
        q_tables.append({i: tuple(unscale(x) for x in q[i]) for i in members})
        pi_tables.append({i: graph.actions[all_pi[h - 1][i]] for i in members})
    return DpSolution(graph, v_tables, q_tables, pi_tables)


def _dp_fraction(graph):
    """Generic engine: per-layer dicts of exact Fractions.

    Layer h+1 contains every successor of a layer-h state, so the values
    computed for layer h+1 are all the next-step values layer h needs.
    """
    horizon = graph.horizon
    v_tables = [None] * horizon
    q_tables = [None] * horizon
    pi_tables = [None] * horizon
    v_next = None
    for h in range(horizon, 0, -1):
        v_layer, q_layer, pi_layer = {}, {}, {}
        for i in graph.layers[h - 1]:
            qs = []
            for j, a in enumerate(graph.actions):
                q = Fraction(graph.rewards[i][j])
                if v_next is not None:
                    for tgt, p in graph.succ[i][j]:
                        q += p * v_next[tgt]
                qs.append(q)
            best_j = 0
            for j in range(1, len(qs)):
                if qs[j] > qs[best_j]:
                    best_j = j
            v_layer[i] = qs[best_j]
            q_layer[i] = tuple(qs)
            pi_layer[i] = graph.actions[best_j]
        v_tables[h - 1] = v_layer
        q_tables[h - 1] = q_layer
        pi_tables[h - 1] = pi_layer
        v_next = v_layer
    return DpSolution(graph, v_tables, q_tables, pi_tables)


def bellman_residuals(family, solution):
    """Recompute Q - r - sum P V' at every stored (h, state, action).

    Returns the residual list; all entries must be exactly zero.  This
    re-evaluates `family.step`, so it cross-checks the tables against the
    environment rather than against the DP's own cached graph.
    """
    residuals = []
    horizon = solution.horizon
    for h in range(1, horizon + 1):
        for state in solution.layer_states(h):
            for a in solution.actions:
                outcome = family.step(state, a)
                expected = Fraction(outcome.reward)
                if h < horizon:
                    for s2, p in outcome.successors:
                        expected += p * Fraction(solution.value(h + 1, s2))
                residuals.append(Fraction(solution.q_value(h, state, a)) - expected)
    return residuals


def policy_value(family, policy, horizon=None):
    """Exact expected return of a deterministic policy from the start state.

    The policy is a callable state -> action, total on every state it can
    reach; anything else raises InvalidPolicyError naming the state.
    """
    horizon = family.horizon if horizon is None else horizon
    memo = {}

    def rec(s, h):
        if h > horizon:
            return Fraction(0)
        key = (family.state_key(s), h)
        if key in memo:
            return memo[key]
        action = policy(s)
        if action is None or action not in tuple(family.actions(s)):
            raise InvalidPolicyError(
                f"policy returned {action!r} at a reached state", state=s
            )
        outcome = family.step(s, action)
        total = Fraction(outcome.reward)
        for s2, p in outcome.successors:
            total += p * rec(s2, h + 1)
        memo[key] = total
        return total

    result = rec(family.initial_state(), 1)
    return int(result) if result.denominator == 1 else result


def rollout(family, policy, seed, horizon=None):
    """Sample one trajectory; deterministic families ignore the seed.

    Returns (trajectory, total reward) where the trajectory is a list of
    (state, action, reward) triples of length exactly `horizon`.
    """
    horizon = family.horizon if horizon is None else horizon
    rng = random.Random(seed)
    state = family.initial_state()
    trajectory = []
    total = Fraction(0)
    for _ in range(horizon):
        action = policy(state)
        if action is None or action not in tuple(family.actions(state)):
            raise InvalidPolicyError(
                f"policy returned {action!r} at a reached state", state=state
            )
        outcome = family.step(state, action)
        trajectory.append((state, action, outcome.reward))
        total += outcome.reward
        if len(outcome.successors) == 1:
            state = outcome.successors[0][0]
        else:
            draw = rng.random()
            acc = Fraction(0)
            state = outcome.successors[-1][0]
            for s2, p in outcome.successors:
                acc += p
                if draw < acc:
                    state = s2
                    break
    return trajectory, (int(total) if total.denominator == 1 else total)


def format_rational(x):
    """Canonical string form for exact values, e.g. '3/4', '1', '0'."""
    return str(Fraction(x))


def solution_to_json(family, solution):
    """JSON export: per-layer states with V, per-action Q, and argmax."""
    layers = []
    for h in range(1, solution.horizon + 1):
        entries = []
        for state in solution.layer_states(h):
            entries.append(
                {
                    "state": family.state_to_json(state),
                    "v": format_rational(solution.value(h, state)),
                    "q": {
                        str(a): format_rational(solution.q_value(h, state, a))
                        for a in solution.actions
                    },
                    "pi": solution.policy_action(h, state),
                }
            )
        entries.sort(key=lambda e: json.dumps(e["state"], sort_keys=True))
        layers.append({"h": h, "states": entries})
    return {
        "family": family.family,
        "horizon": solution.horizon,
        "reachableStates": solution.reachable_count(),
        "layers": layers,
    }


def solution_to_csv(family, solution):
    """CSV summary: one row per horizon step (h, layer size, V1*(s0))."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["h", "layer_size", "v1_start"])
    v1 = format_rational(solution.start_value())
    for h in range(1, solution.horizon + 1):
        writer.writerow([h, len(solution.layer_states(h)), v1])
    return buf.getvalue()
