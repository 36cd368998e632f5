"""Topologically indexed boolean gate circuits.

Nodes are numbered 1..n.  AND/OR/NOT gates may only reference strictly
smaller node indices, so a single left-to-right pass evaluates the whole
circuit; node n is the output.  CONST0/CONST1 are leaf nodes.  INPUT nodes
read a bit of an external input string (1-based) and are only legal in
circuits meant to recognize strings.

JSON schema: {"n": int, "nodes": [{"in1": int, "in2": int, "gate": str}]},
with gate one of AND|OR|NOT|CONST0|CONST1|INPUT and 0 in unused in-slots.
"""

from dataclasses import dataclass
from typing import NamedTuple

from mdpzoo.errors import InvalidInputError

# Canonical gate order; embeddings and bit layouts use 1-based codes in
# this order (AND=1 ... INPUT=6).
GATE_KINDS = ("AND", "OR", "NOT", "CONST0", "CONST1", "INPUT")
CONST_KINDS = ("CONST0", "CONST1")


def gate_code(kind):
    return GATE_KINDS.index(kind) + 1


class Node(NamedTuple):
    in1: int
    in2: int
    gate: str


@dataclass(frozen=True)
class GateCircuit:
    nodes: tuple[Node, ...]

    def __post_init__(self):
        if not self.nodes:
            raise InvalidInputError("circuit must have at least one node")
        for idx, node in enumerate(self.nodes, start=1):
            if node.gate not in GATE_KINDS:
                raise InvalidInputError(f"node {idx}: unknown gate {node.gate!r}")
            if node.gate in ("AND", "OR"):
                ok = 1 <= node.in1 < idx and 1 <= node.in2 < idx
            elif node.gate == "NOT":
                ok = 1 <= node.in1 < idx and node.in2 == 0
            elif node.gate == "INPUT":
                ok = node.in1 >= 1 and node.in2 == 0
            else:  # CONST0 / CONST1
                ok = node.in1 == 0 and node.in2 == 0
            if not ok:
                raise InvalidInputError(
                    f"node {idx}: bad inputs ({node.in1}, {node.in2}) for {node.gate}"
                )

    @property
    def size(self):
        return len(self.nodes)

    @property
    def has_inputs(self):
        return any(node.gate == "INPUT" for node in self.nodes)

    def max_input_ref(self):
        return max(
            (node.in1 for node in self.nodes if node.gate == "INPUT"), default=0
        )

    def to_json(self):
        return {
            "n": self.size,
            "nodes": [
                {"in1": node.in1, "in2": node.in2, "gate": node.gate}
                for node in self.nodes
            ],
        }

    @classmethod
    def from_json(cls, data):
        try:
            nodes = tuple(
                Node(int(d["in1"]), int(d["in2"]), str(d["gate"]))
                for d in data["nodes"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed circuit JSON: {exc}") from exc
        circuit = cls(nodes)
        if "n" in data and int(data["n"]) != circuit.size:
            raise InvalidInputError("declared size does not match node count")
        return circuit


def gate_output(gate, val1, val2):
    """Output of one gate given computed input values (0/1)."""
    if gate == "AND":
        return val1 & val2
    if gate == "OR":
        return val1 | val2
    if gate == "NOT":
        return 1 - val1
    if gate == "CONST0":
        return 0
    if gate == "CONST1":
        return 1
    raise InvalidInputError(f"gate_output undefined for {gate}")


def node_values(circuit, x=None):
    """Evaluate every node in topological order; returns a tuple of bits."""
    values = []
    for idx, node in enumerate(circuit.nodes, start=1):
        if node.gate == "INPUT":
            if x is None:
                raise InvalidInputError(
                    f"node {idx} is an INPUT gate but no input string was supplied"
                )
            if node.in1 > len(x):
                raise InvalidInputError(
                    f"node {idx} reads input bit {node.in1} but |x|={len(x)}"
                )
            values.append(x[node.in1 - 1])
        else:
            val1 = values[node.in1 - 1] if node.in1 else 0
            val2 = values[node.in2 - 1] if node.in2 else 0
            values.append(gate_output(node.gate, val1, val2))
    return tuple(values)


def evaluate_circuit(circuit, x=None):
    """Value of the output node (the final node) under standard semantics."""
    return node_values(circuit, x)[-1]
