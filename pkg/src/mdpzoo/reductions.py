"""Reductions between decision problems and MDP optimal values/policies.

Each decision route is checked twice: a brute-force decider answers the
problem directly, and the exact DP oracle answers it through the MDP
construction.  The formula/machine families decide via the Q threshold
Q1*(s0, 1) > 3/4; the circuit families decide via Q1*(s0, a*) = 1 at the
greedy-optimal first action a*.
"""

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

from mdpzoo.core.circuits import GateCircuit, Node, evaluate_circuit
from mdpzoo.core.formulas import Cnf3Formula, all_assignments, evaluate_formula
from mdpzoo.core.ndtm import (
    BLANK,
    START_MARKER,
    SYM0,
    SYM1,
    NdtmSpec,
    complete_delta,
    ndtm_accepts,
)
from mdpzoo.environments import (
    CvpMdp,
    NpMdp,
    PMdp,
    SatMdp,
    cvp_optimal_policy,
    p_optimal_policy,
)
from mdpzoo.errors import InvalidInputError, ResourceLimitError
from mdpzoo.oracle import exact_dp, format_rational

Q_THRESHOLD = Fraction(3, 4)
PADDING_CLAUSE = (1, -1, 1)


@dataclass
class DecisionReport:
    """One instance decided both ways, plus the Q value behind the MDP answer."""

    instance_id: str
    family: str
    oracle_answer: int
    mdp_answer: int
    q1_value: Fraction

    @property
    def agree(self):
        return int(self.oracle_answer == self.mdp_answer)

    def to_json(self):
        return {
            "instanceId": self.instance_id,
            "family": self.family,
            "oracleAnswer": self.oracle_answer,
            "mdpAnswer": self.mdp_answer,
            "q1Value": format_rational(self.q1_value),
            "agree": self.agree,
        }


def pad_to_3cnf(clauses, n):
    """Normalize a CNF with at most n clauses over at most n variables to
    an exactly-n-clause 3-CNF, preserving satisfiability.

    Width-1/2 clauses are padded by repeating their first literal; the
    clause count is padded with the tautology (u1 v ~u1 v u1).
    """
    if len(clauses) > n:
        raise InvalidInputError(f"more than {n} clauses")
    padded = []
    for clause in clauses:
        clause = tuple(clause)
        if not 1 <= len(clause) <= 3:
            raise InvalidInputError(f"clause {clause} has width {len(clause)}")
        for lit in clause:
            if lit == 0 or abs(lit) > n:
                raise InvalidInputError(f"literal {lit} out of range for n={n}")
        while len(clause) < 3:
            clause = clause + (clause[0],)
        padded.append(clause)
    while len(padded) < n:
        padded.append(PADDING_CLAUSE)
    return Cnf3Formula(n, tuple(padded))


def sat_brute_force(formula, max_n=24):
    """Enumerate all 2^n assignments; returns (bit, witness or None).

    The witness is the smallest satisfying assignment in binary counting
    order (bit 1 is the least significant).
    """
    if formula.n > max_n:
        raise ResourceLimitError(f"n={formula.n} exceeds brute-force ceiling {max_n}")
    for bits in all_assignments(formula.n):
        if evaluate_formula(formula, bits):
            return 1, bits
    return 0, None


def decide_via_mdp(family_name, instance, instance_id="", **kwargs):
    """Decide one instance by brute force and through the MDP, and report.

    Instances: a Cnf3Formula for "sat", (NdtmSpec, input string) for
    "np", a GateCircuit for "cvp", and (input bits, GateCircuit) for "p".
    """
    if family_name == "sat":
        fam = SatMdp(instance)
        oracle_bit = sat_brute_force(instance)[0]
        solution = exact_dp(fam, **kwargs)
        q1 = solution.start_q()[1]
        mdp_bit = int(q1 > Q_THRESHOLD)
    elif family_name == "np":
        spec, bits = instance
        fam = NpMdp(spec, bits)
        oracle_bit = ndtm_accepts(spec, bits)
        solution = exact_dp(fam, **kwargs)
        q1 = solution.start_q()[1]
        mdp_bit = int(q1 > Q_THRESHOLD)
    elif family_name == "cvp":
        fam = CvpMdp(instance)
        oracle_bit = evaluate_circuit(instance)
        solution = exact_dp(fam, **kwargs)
        best = cvp_optimal_policy(fam.initial_state())
        q1 = solution.start_q()[best]
        mdp_bit = int(q1 == 1)
    elif family_name == "p":
        bits, circuit = instance
        fam = PMdp(bits, circuit)
        oracle_bit = evaluate_circuit(circuit, bits)
        solution = exact_dp(fam, **kwargs)
        best = p_optimal_policy(fam.initial_state(), fam.bound)
        q1 = solution.start_q()[best]
        mdp_bit = int(q1 == 1)
    else:
        raise InvalidInputError(f"no decision route for family {family_name!r}")
    return DecisionReport(
        instance_id=instance_id,
        family=family_name,
        oracle_answer=oracle_bit,
        mdp_answer=mdp_bit,
        q1_value=Fraction(q1),
    )


def reports_to_jsonl(reports):
    lines = [json.dumps(r.to_json(), sort_keys=True) for r in reports]
    return "\n".join(lines) + "\n" if lines else ""


def reports_to_csv(reports):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["family", "instances", "agreements", "disagreements"])
    by_family = {}
    for r in reports:
        by_family.setdefault(r.family, []).append(r)
    for family in sorted(by_family):
        rs = by_family[family]
        agree = sum(r.agree for r in rs)
        writer.writerow([family, len(rs), agree, len(rs) - agree])
    return buf.getvalue()


P_LANGUAGES = ("first-bit-1", "all-ones", "contains-a-1")


def make_p_language_circuits(language, n):
    """A circuit with INPUT gates recognizing length-n members of a
    built-in language."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if language == "first-bit-1":
        return GateCircuit((Node(1, 0, "INPUT"),))
    if language == "all-ones":
        return _fold_inputs(n, "AND")
    if language == "contains-a-1":
        return _fold_inputs(n, "OR")
    raise InvalidInputError(f"unknown language {language!r}")


def _fold_inputs(n, op):
    nodes = [Node(i, 0, "INPUT") for i in range(1, n + 1)]
    acc = n
    for i in range(2, n + 1):
        nodes.append(Node(acc, i, op))
        acc = len(nodes)
    return GateCircuit(tuple(nodes))


# ---------------------------------------------------------------------------
# Toy machine fixtures.  Together they exercise: unconditional acceptance,
# unconditional rejection, branch guessing against a hardwired target,
# nondeterministic tape walking, and a deterministic input scan.

NDTM_FIXTURES = (
    "always-accept",
    "never-accept",
    "guess-and-match",
    "contains-a-1",
    "equals-101",
)

_ALPHABET = (BLANK, START_MARKER, SYM0, SYM1)


def toy_ndtm(name, n):
    """Build a fixture machine sized for inputs of length n."""
    if name == "always-accept":
        return _machine(
            states=("start", "accept", "halt"),
            rules0={("start", sym): ("accept", sym, "S") for sym in _ALPHABET},
            rules1={("start", sym): ("accept", sym, "S") for sym in _ALPHABET},
            step_bound=n + 2,
        )
    if name == "never-accept":
        return _machine(
            states=("start", "accept", "halt"),
            rules0={},
            rules1={},
            step_bound=n + 2,
        )
    if name == "guess-and-match":
        return _guess_and_match("101", n)
    if name == "contains-a-1":
        return _contains_a_1(n)
    if name == "equals-101":
        return _equals_target("101", n)
    raise InvalidInputError(f"unknown fixture {name!r}")


def _machine(states, rules0, rules1, step_bound, start="start"):
    return NdtmSpec(
        states=states,
        start=start,
        accept="accept",
        halt="halt",
        tape_alphabet=_ALPHABET,
        delta0=complete_delta(rules0, states, _ALPHABET, "halt"),
        delta1=complete_delta(rules1, states, _ALPHABET, "halt"),
        step_bound=step_bound,
    )


def _guess_and_match(target, n):
    """Guess len(target) branch bits; accept iff they equal the target.

    Input-independent (some branch sequence always matches), so it
    accepts every string; the point is that acceptance arrives only
    through the matching branch sequence.
    """
    k = len(target)
    states = tuple(f"match{i}" for i in range(k)) + ("accept", "halt")
    rules0, rules1 = {}, {}
    for i, t in enumerate(target):
        nxt = "accept" if i == k - 1 else f"match{i + 1}"
        good = rules1 if t == "1" else rules0
        bad = rules0 if t == "1" else rules1
        for sym in _ALPHABET:
            good[(f"match{i}", sym)] = (nxt, sym, "S")
            bad[(f"match{i}", sym)] = ("halt", sym, "S")
    return _machine(
        states, rules0, rules1, step_bound=max(k + 1, n + 1), start="match0"
    )


def _contains_a_1(n):
    """Nondeterministic walker: branch 0 keeps moving right, branch 1
    claims the current cell holds a 1 (accept iff it does)."""
    states = ("start", "scan", "accept", "halt")
    rules0 = {("start", START_MARKER): ("scan", START_MARKER, "R")}
    rules1 = {("start", START_MARKER): ("scan", START_MARKER, "R")}
    for sym in (SYM0, SYM1):
        rules0[("scan", sym)] = ("scan", sym, "R")
    rules1[("scan", SYM1)] = ("accept", SYM1, "S")
    rules1[("scan", SYM0)] = ("halt", SYM0, "S")
    return _machine(states, rules0, rules1, step_bound=n + 2)


def _equals_target(target, n):
    """Deterministic scan: accept iff the input string equals the target."""
    k = len(target)
    states = tuple(f"pos{i}" for i in range(k + 1)) + ("checkend", "accept", "halt")
    rules = {("pos0", START_MARKER): ("pos1", START_MARKER, "R")}
    for i, t in enumerate(target, start=1):
        want = SYM1 if t == "1" else SYM0
        nxt = f"pos{i + 1}" if i < k else "checkend"
        rules[(f"pos{i}", want)] = (nxt, want, "R")
    rules[("checkend", BLANK)] = ("accept", BLANK, "S")
    return _machine(
        states, rules, dict(rules), step_bound=max(k + 3, n + 3), start="pos0"
    )


def ndtm_fixture_suite(max_len=4):
    """(machine name, input string) pairs for every fixture and every
    binary input of length 1..max_len."""
    pairs = []
    for name in NDTM_FIXTURES:
        for length in range(1, max_len + 1):
            for m in range(1 << length):
                bits = "".join(str((m >> i) & 1) for i in range(length))
                pairs.append((name, bits))
    return pairs
