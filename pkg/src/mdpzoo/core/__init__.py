"""Foundational computational models: 3-CNF formulas, gate circuits, NDTMs."""

from mdpzoo.core.circuits import (
    CONST_KINDS,
    GATE_KINDS,
    GateCircuit,
    Node,
    evaluate_circuit,
    gate_code,
    gate_output,
    node_values,
)
from mdpzoo.core.formulas import (
    Cnf3Formula,
    all_assignments,
    all_formulas,
    code_to_literal,
    evaluate_formula,
    literal_code,
    literal_value,
    parse_dimacs,
)
from mdpzoo.core.ndtm import (
    BLANK,
    MOVES,
    START_MARKER,
    SYM0,
    SYM1,
    Configuration,
    NdtmSpec,
    complete_delta,
    initial_configuration,
    ndtm_accepts,
    ndtm_step,
)

__all__ = [
    "BLANK",
    "CONST_KINDS",
    "Cnf3Formula",
    "Configuration",
    "GATE_KINDS",
    "GateCircuit",
    "MOVES",
    "NdtmSpec",
    "Node",
    "START_MARKER",
    "SYM0",
    "SYM1",
    "all_assignments",
    "all_formulas",
    "code_to_literal",
    "complete_delta",
    "evaluate_circuit",
    "evaluate_formula",
    "gate_code",
    "gate_output",
    "initial_configuration",
    "literal_code",
    "literal_value",
    "ndtm_accepts",
    "ndtm_step",
    "node_values",
    "parse_dimacs",
]
