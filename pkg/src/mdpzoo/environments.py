"""The six MDP families behind one finite-horizon step contract.

Every family exposes: `initial_state()`, `actions(s)`, `step(s, a)` which
returns a StepOutcome (explicit successor distribution plus reward), a
`horizon`, and a `state_key(s)` used to intern states during dynamic
programming (the immutable instance part is dropped from the key).

Probabilities and rewards are exact: Python ints and fractions.Fraction,
never floats.  Step functions are pure; stochastic branching is an
explicit distribution, there is no hidden RNG.

Conventions shared by the formula/machine families: the step counter is 0
before the first action; taking action 0 there routes to the "give up"
branch whose terminal counter value pays 1/2 at the last step, while
action 1 starts the work phase.  The counter is clamped at its terminal
value, which is reached exactly at the final step of an episode, so the
clamp is invisible within the horizon.

The circuit families (CVP and the string-recognition variant) pay reward
1 on a state whose value vector is fully computed with the output node
true.  The node values are tri-state: 0, 1, and None for "not computed
yet".
"""

from fractions import Fraction
from typing import NamedTuple

from mdpzoo.core.circuits import GateCircuit, gate_output
from mdpzoo.core.formulas import Cnf3Formula, evaluate_formula
from mdpzoo.core.ndtm import Configuration, NdtmSpec, initial_configuration, ndtm_step
from mdpzoo.errors import InvalidInputError

HALF = Fraction(1, 2)
TWO_THIRDS = Fraction(2, 3)
ONE_THIRD = Fraction(1, 3)

# Third action of the stochastic formula family; 0 and 1 keep their
# meaning as bit values, NEXT advances the counter.
NEXT = 2


class StepOutcome(NamedTuple):
    """Successor distribution (state, probability) pairs and the reward."""

    successors: tuple
    reward: object  # int or Fraction


def _det(state, reward):
    return StepOutcome(((state, 1),), reward)


class SatState(NamedTuple):
    formula: Cnf3Formula
    bits: tuple
    step: int


class NpState(NamedTuple):
    config: Configuration
    step: int


class CvpState(NamedTuple):
    circuit: GateCircuit
    values: tuple  # entries 0, 1, or None


class PState(NamedTuple):
    input_bits: tuple
    circuit: GateCircuit
    values: tuple


class SatMdp:
    """Deterministic formula-satisfaction MDP.

    States (formula, bits, step) with step in {0} + [2n+2] and horizon
    n+2.  Reward 1 when the bits satisfy the formula at step n+1, 1/2 at
    step 2n+2, else 0.
    """

    family = "sat"

    def __init__(self, formula):
        self.formula = formula
        self.n = formula.n

    @property
    def horizon(self):
        return self.n + 2

    def initial_state(self):
        return SatState(self.formula, (0,) * self.n, 0)

    def actions(self, state):
        return (0, 1)

    def state_key(self, state):
        return (state.bits, state.step)

    def reward(self, state, action):
        n = self.n
        if state.step == n + 1 and evaluate_formula(self.formula, state.bits):
            return 1
        if state.step == 2 * n + 2:
            return HALF
        return 0

    def step(self, state, action):
        n = self.n
        k = state.step
        reward = self.reward(state, action)
        if k == 0:
            k_next = 1 if action == 1 else n + 2
            return _det(state._replace(step=k_next), reward)
        if k <= n:
            bits = state.bits[: k - 1] + (action,) + state.bits[k:]
            return _det(SatState(state.formula, bits, k + 1), reward)
        return _det(state._replace(step=min(k + 1, 2 * n + 2)), reward)

    def state_to_json(self, state):
        return {"bits": list(state.bits), "step": state.step}


class NpMdp:
    """Machine-simulation MDP: actions pick the branch of an NDTM step.

    States (configuration, step) with horizon P+2 where P is the
    machine's step bound; reward 1 when the machine sits in its accept
    state at step P+1, 1/2 at step 2P+2.
    """

    family = "np"

    def __init__(self, spec, input_bits):
        self.spec = spec
        self.input_bits = tuple(str(b) for b in input_bits)
        self.bound = spec.step_bound

    @property
    def horizon(self):
        return self.bound + 2

    def initial_state(self):
        return NpState(initial_configuration(self.spec, self.input_bits), 0)

    def actions(self, state):
        return (0, 1)

    def state_key(self, state):
        return (state.config, state.step)

    def reward(self, state, action):
        if state.step == self.bound + 1 and state.config.state == self.spec.accept:
            return 1
        if state.step == 2 * self.bound + 2:
            return HALF
        return 0

    def step(self, state, action):
        bound = self.bound
        k = state.step
        reward = self.reward(state, action)
        if k == 0:
            k_next = 1 if action == 1 else bound + 2
            return _det(state._replace(step=k_next), reward)
        if k <= bound:
            config = ndtm_step(self.spec, state.config, action)
            return _det(NpState(config, k + 1), reward)
        return _det(state._replace(step=min(k + 1, 2 * bound + 2)), reward)

    def state_to_json(self, state):
        return {
            "tmState": state.config.state,
            "tape": "".join(state.config.tape),
            "head": state.config.head,
            "step": state.step,
        }


def _node_output(circuit, values, action, x=None):
    """Correct output of the targeted node, or None if an input is missing."""
    node = circuit.nodes[action - 1]
    if node.gate == "INPUT":
        if node.in1 > len(x):
            raise InvalidInputError(
                f"node {action} reads input bit {node.in1} but |x|={len(x)}"
            )
        return x[node.in1 - 1]
    if node.gate == "CONST0":
        return 0
    if node.gate == "CONST1":
        return 1
    val1 = values[node.in1 - 1]
    if node.gate == "NOT":
        return None if val1 is None else 1 - val1
    val2 = values[node.in2 - 1]
    if val1 is None or val2 is None:
        return None
    return gate_output(node.gate, val1, val2)


def _values_reward(values, out_index):
    """1 iff every node value is computed and the output node is true."""
    if values[out_index - 1] != 1:
        return 0
    return 0 if any(v is None for v in values) else 1


def _min_computable(circuit, values, x=None):
    """Smallest index of a node whose inputs are known but value is not."""
    for idx, node in enumerate(circuit.nodes, start=1):
        if values[idx - 1] is not None:
            continue
        if node.gate in ("CONST0", "CONST1", "INPUT"):
            return idx
        if node.gate == "NOT":
            if values[node.in1 - 1] is not None:
                return idx
        elif values[node.in1 - 1] is not None and values[node.in2 - 1] is not None:
            return idx
    return None


class CvpMdp:
    """Circuit-evaluation MDP: each action computes one node value.

    Horizon n+1 for a size-n circuit; reward 1 exactly on states whose
    value vector is fully computed with the output node true, which makes
    the smallest-computable-node policy optimal and caps the return at 1.
    """

    family = "cvp"

    def __init__(self, circuit):
        if circuit.has_inputs:
            raise InvalidInputError("INPUT gates are only legal in the string family")
        self.circuit = circuit
        self.n = circuit.size

    @property
    def horizon(self):
        return self.n + 1

    def initial_state(self):
        return CvpState(self.circuit, (None,) * self.n)

    def actions(self, state):
        return range(1, self.n + 1)

    def state_key(self, state):
        return state.values

    def reward(self, state, action):
        return _values_reward(state.values, self.n)

    def step(self, state, action):
        reward = self.reward(state, action)
        out = _node_output(self.circuit, state.values, action)
        values = state.values[: action - 1] + (out,) + state.values[action:]
        return _det(CvpState(state.circuit, values), reward)

    def state_to_json(self, state):
        return {"values": [_value_json(v) for v in state.values]}


class PMdp:
    """String-recognition MDP over a circuit with INPUT gates.

    The action space is padded to [step_bound]; actions beyond the actual
    circuit size are no-ops.  Horizon step_bound+1.
    """

    family = "p"

    def __init__(self, input_bits, circuit, step_bound=None):
        self.input_bits = tuple(int(b) for b in input_bits)
        if any(b not in (0, 1) for b in self.input_bits):
            raise InvalidInputError("input string must be binary")
        if circuit.max_input_ref() > len(self.input_bits):
            raise InvalidInputError(
                f"circuit reads input bit {circuit.max_input_ref()} "
                f"but |x|={len(self.input_bits)}"
            )
        self.circuit = circuit
        self.size = circuit.size
        self.bound = self.size if step_bound is None else step_bound
        if self.bound < self.size:
            raise InvalidInputError("step bound smaller than the circuit size")

    @property
    def horizon(self):
        return self.bound + 1

    def initial_state(self):
        return PState(self.input_bits, self.circuit, (None,) * self.size)

    def actions(self, state):
        return range(1, self.bound + 1)

    def state_key(self, state):
        return state.values

    def reward(self, state, action):
        return _values_reward(state.values, self.size)

    def step(self, state, action):
        reward = self.reward(state, action)
        if action > self.size:
            return _det(state, reward)
        out = _node_output(self.circuit, state.values, action, self.input_bits)
        values = state.values[: action - 1] + (out,) + state.values[action:]
        return _det(PState(state.input_bits, state.circuit, values), reward)

    def state_to_json(self, state):
        return {"values": [_value_json(v) for v in state.values]}


class StochSatMdp:
    """Stochastic variant of the formula family.

    Actions are {0, 1, NEXT}.  Writing a bit succeeds with probability
    2/3 (the opposite bit lands with probability 1/3) and does not
    advance the counter; NEXT advances it.  Horizon n^2+n+2.  Reward 1
    needs a satisfying assignment at counter n+1 together with action
    NEXT; the give-up branch pays 1/2 at counter n^2+2n+2, reachable only
    at the final step.
    """

    family = "stoch-sat"

    def __init__(self, formula):
        self.formula = formula
        self.n = formula.n

    @property
    def horizon(self):
        n = self.n
        return n * n + n + 2

    @property
    def terminal_step(self):
        n = self.n
        return n * n + 2 * n + 2

    def initial_state(self):
        return SatState(self.formula, (0,) * self.n, 0)

    def actions(self, state):
        return (0, 1, NEXT)

    def state_key(self, state):
        return (state.bits, state.step)

    def reward(self, state, action):
        n = self.n
        if (
            state.step == n + 1
            and action == NEXT
            and evaluate_formula(self.formula, state.bits)
        ):
            return 1
        if state.step == self.terminal_step:
            return HALF
        return 0

    def step(self, state, action):
        n = self.n
        k = state.step
        reward = self.reward(state, action)
        if action == NEXT:
            return _det(state._replace(step=min(k + 1, self.terminal_step)), reward)
        if k == 0:
            k_next = 1 if action == 1 else n + 2
            return _det(state._replace(step=k_next), reward)
        if k <= n:
            hit = state.bits[: k - 1] + (action,) + state.bits[k:]
            miss = state.bits[: k - 1] + (1 - action,) + state.bits[k:]
            return StepOutcome(
                (
                    (SatState(state.formula, hit, k), TWO_THIRDS),
                    (SatState(state.formula, miss, k), ONE_THIRD),
                ),
                reward,
            )
        return _det(state, reward)

    def state_to_json(self, state):
        return {"bits": list(state.bits), "step": state.step}


class StochCvpMdp:
    """Stochastic circuit evaluation: a computed value lands with
    probability 2/3 and stays unknown with probability 1/3.

    The horizon is a constructor parameter (default 3n^2) because n+1
    steps leave no room for retries.
    """

    family = "stoch-cvp"

    def __init__(self, circuit, horizon=None):
        if circuit.has_inputs:
            raise InvalidInputError("INPUT gates are only legal in the string family")
        self.circuit = circuit
        self.n = circuit.size
        self._horizon = 3 * self.n * self.n if horizon is None else horizon
        if self._horizon < 1:
            raise InvalidInputError("horizon must be positive")

    @property
    def horizon(self):
        return self._horizon

    def initial_state(self):
        return CvpState(self.circuit, (None,) * self.n)

    def actions(self, state):
        return range(1, self.n + 1)

    def state_key(self, state):
        return state.values

    def reward(self, state, action):
        return _values_reward(state.values, self.n)

    def step(self, state, action):
        reward = self.reward(state, action)
        out = _node_output(self.circuit, state.values, action)
        miss = state.values[: action - 1] + (None,) + state.values[action:]
        if out is None:
            return _det(CvpState(state.circuit, miss), reward)
        hit = state.values[: action - 1] + (out,) + state.values[action:]
        return StepOutcome(
            (
                (CvpState(state.circuit, hit), TWO_THIRDS),
                (CvpState(state.circuit, miss), ONE_THIRD),
            ),
            reward,
        )

    def state_to_json(self, state):
        return {"values": [_value_json(v) for v in state.values]}


def cvp_optimal_policy(state):
    """Smallest node index with computed inputs and uncomputed output.

    Falls back to the largest node index when no node qualifies; the
    transition is then a value-preserving recomputation.
    """
    best = _min_computable(state.circuit, state.values)
    return best if best is not None else state.circuit.size


def p_optimal_policy(state, step_bound=None):
    """Like cvp_optimal_policy plus the INPUT-gate clause; the empty-set
    fallback is the last action of the padded action space."""
    best = _min_computable(state.circuit, state.values, state.input_bits)
    if best is not None:
        return best
    return state.circuit.size if step_bound is None else step_bound


def _value_json(v):
    return None if v is None else int(v)


def _value_from_json(v):
    return None if v is None else int(v)


FAMILY_NAMES = ("sat", "np", "cvp", "p", "stoch-sat", "stoch-cvp")


def make_family(name, instance, horizon=None):
    """Build a family object from JSON-shaped instance data.

    Instance payloads: formula JSON for sat/stoch-sat, circuit JSON for
    cvp/stoch-cvp, {"ndtm", "input"} for np, {"circuit", "input",
    "stepBound"?} for p.
    """
    if name == "sat":
        return SatMdp(Cnf3Formula.from_json(instance))
    if name == "stoch-sat":
        return StochSatMdp(Cnf3Formula.from_json(instance))
    if name == "cvp":
        return CvpMdp(GateCircuit.from_json(instance))
    if name == "stoch-cvp":
        return StochCvpMdp(GateCircuit.from_json(instance), horizon=horizon)
    if name == "np":
        try:
            spec = NdtmSpec.from_json(instance["ndtm"])
            bits = instance["input"]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed np instance: {exc}") from exc
        return NpMdp(spec, bits)
    if name == "p":
        try:
            circuit = GateCircuit.from_json(instance["circuit"])
            bits = [int(b) for b in instance["input"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed p instance: {exc}") from exc
        return PMdp(bits, circuit, step_bound=instance.get("stepBound"))
    raise InvalidInputError(f"unknown family {name!r}")


def make_initial(family):
    """The definition's initial state for an already-constructed family."""
    return family.initial_state()


def family_to_json(fam):
    """Serialize a family instance as {"family", "instance", "horizon"?}."""
    if isinstance(fam, (SatMdp, StochSatMdp)):
        instance = fam.formula.to_json()
    elif isinstance(fam, CvpMdp):
        instance = fam.circuit.to_json()
    elif isinstance(fam, StochCvpMdp):
        return {
            "family": fam.family,
            "instance": fam.circuit.to_json(),
            "horizon": fam.horizon,
        }
    elif isinstance(fam, NpMdp):
        instance = {"ndtm": fam.spec.to_json(), "input": "".join(fam.input_bits)}
    elif isinstance(fam, PMdp):
        instance = {
            "circuit": fam.circuit.to_json(),
            "input": "".join(str(b) for b in fam.input_bits),
            "stepBound": fam.bound,
        }
    else:
        raise InvalidInputError(f"not a family instance: {fam!r}")
    return {"family": fam.family, "instance": instance}
