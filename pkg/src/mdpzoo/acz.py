"""Constant-depth, unbounded-fan-in circuit builders for the MDP models
and the circuit-family optimal policies, with size/depth accounting.

The circuits operate on frozen bit layouts of states and actions:

* integers (step counters, node references, action indices, machine-state
  and symbol codes) are stored LSB-first in ceil(log2(range)) bits, with
  1-based codes shifted down by one so every field starts at 0;
* assignment bits are stored raw;
* tri-state node values take 2 bits (lo, hi): 0 -> 00, 1 -> 10, unknown
  -> 01 (so the hi bit alone flags "not computed");
* rewards come out as 2 bits (one, half): 00 -> 0, 01 -> 1/2, 10 -> 1.

AND/OR gates have unbounded fan-in and count 1 toward depth; negations
are NOT gates on any ref, counted in size and depth.  Every integer
subfunction (counter updates, machine steps, node-output tables) goes
through the two-layer minterm lookup, so builder depth is a structural
constant independent of the instance dimension.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from mdpzoo.core.circuits import GATE_KINDS, gate_code
from mdpzoo.core.ndtm import MOVE_OFFSET
from mdpzoo.errors import InvalidInputError, ResourceLimitError

LOOKUP_SIZE_CONSTANT = 2  # size of a lookup is at most 2 * l * 2^l for m <= 2^l outputs
MAX_LOOKUP_BITS = 22


class BGate(NamedTuple):
    op: str  # AND | OR | NOT
    args: tuple


@dataclass(frozen=True)
class BoolCircuit:
    """Refs 0..n_inputs-1 are inputs; ref n_inputs+i is gate i."""

    n_inputs: int
    gates: tuple
    outputs: tuple

    def to_json(self):
        return {
            "inputs": self.n_inputs,
            "gates": [{"op": g.op, "args": list(g.args)} for g in self.gates],
            "outputs": list(self.outputs),
        }

    @classmethod
    def from_json(cls, data):
        try:
            gates = tuple(
                BGate(str(g["op"]), tuple(int(a) for a in g["args"]))
                for g in data["gates"]
            )
            return cls(int(data["inputs"]), gates, tuple(data["outputs"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed circuit JSON: {exc}") from exc


class CircuitStats(NamedTuple):
    size: int  # gate count (inputs not included)
    depth: int  # longest input-to-output path, counting every gate


def evaluate_bool_circuit(circuit, bits):
    """Evaluate all gates in order; returns the tuple of output bits."""
    if len(bits) != circuit.n_inputs:
        raise InvalidInputError(
            f"expected {circuit.n_inputs} input bits, got {len(bits)}"
        )
    values = list(bits)
    for gate in circuit.gates:
        args = [values[a] for a in gate.args]
        if gate.op == "AND":
            values.append(int(all(args)))
        elif gate.op == "OR":
            values.append(int(any(args)))
        elif gate.op == "NOT":
            values.append(1 - args[0])
        else:
            raise InvalidInputError(f"unknown op {gate.op!r}")
    return tuple(values[ref] for ref in circuit.outputs)


def circuit_stats(circuit):
    """Exact gate count and longest path from any input to any output."""
    depth = [0] * circuit.n_inputs
    for gate in circuit.gates:
        depth.append(1 + max((depth[a] for a in gate.args), default=0))
    out_depth = max((depth[ref] for ref in circuit.outputs), default=0)
    return CircuitStats(size=len(circuit.gates), depth=out_depth)


def bits_for(count):
    """Bits needed to store values 0..count-1 (at least 1)."""
    return max(1, (count - 1).bit_length()) if count > 1 else 1


def int_to_bits(value, width):
    return tuple((value >> i) & 1 for i in range(width))


def bits_to_int(bits):
    return sum(b << i for i, b in enumerate(bits))


class _Builder:
    def __init__(self, n_inputs):
        self.n_inputs = n_inputs
        self.gates = []
        self._not_cache = {}

    def _add(self, op, args):
        self.gates.append(BGate(op, tuple(args)))
        return self.n_inputs + len(self.gates) - 1

    def NOT(self, ref):
        if ref not in self._not_cache:
            self._not_cache[ref] = self._add("NOT", (ref,))
        return self._not_cache[ref]

    def AND(self, args):
        return self._add("AND", args)

    def OR(self, args):
        return self._add("OR", args)

    def const0(self):
        return self._add("OR", ())

    def literals(self, refs, bits):
        """One literal per ref: the ref itself where the bit is 1, its
        negation where the bit is 0."""
        return [r if b else self.NOT(r) for r, b in zip(refs, bits)]

    def indicator(self, refs, value, width=None):
        """Single AND testing that the refs spell out `value`."""
        bits = int_to_bits(value, len(refs) if width is None else width)
        return self.AND(self.literals(refs, bits))

    def lookup(self, in_refs, table, out_width):
        """Two-layer minterm circuit for a partial integer function.

        `table` maps input values (as ints over the in_refs bits) to
        output values; undefined inputs produce all-zero outputs.
        Minterm gates are shared between output bits.
        """
        if len(in_refs) > MAX_LOOKUP_BITS:
            raise ResourceLimitError(
                f"lookup over {len(in_refs)} bits exceeds ceiling {MAX_LOOKUP_BITS}"
            )
        minterms = {}
        by_bit = [[] for _ in range(out_width)]
        for value, out in sorted(table.items()):
            if out == 0:
                continue
            if value not in minterms:
                minterms[value] = self.indicator(in_refs, value)
            for b in range(out_width):
                if (out >> b) & 1:
                    by_bit[b].append(minterms[value])
        return [self.OR(terms) for terms in by_bit]

    def finish(self, outputs):
        return BoolCircuit(self.n_inputs, tuple(self.gates), tuple(outputs))


def lookup_circuit(table, n_inputs, n_outputs):
    """Standalone two-layer circuit computing an arbitrary truth table.

    `table` maps every input value in 0..2^n_inputs-1 (or a subset) to an
    output value over n_outputs bits.  Size is at most 2^l + l + m for l
    input bits and m outputs, within the documented 2*l*2^l bound.
    """
    if n_inputs > MAX_LOOKUP_BITS:
        raise ResourceLimitError(
            f"lookup over {n_inputs} bits exceeds ceiling {MAX_LOOKUP_BITS}"
        )
    builder = _Builder(n_inputs)
    outs = builder.lookup(list(range(n_inputs)), table, n_outputs)
    circuit = builder.finish(outs)
    assert len(circuit.gates) <= LOOKUP_SIZE_CONSTANT * max(1, n_inputs) * (
        2**n_inputs
    ) + n_outputs
    return circuit


def decode_reward(bits):
    """Reward bits (one, half) back to the exact value."""
    one, half = bits
    if one and half:
        raise InvalidInputError("invalid reward encoding 11")
    return 1 if one else (Fraction(1, 2) if half else 0)


# ---------------------------------------------------------------------------
# Bit layouts

VALUE_BITS = {0: (0, 0), 1: (1, 0), None: (0, 1)}


class _Fields:
    """Allocates named contiguous bit fields of an input vector."""

    def __init__(self):
        self.width = 0
        self._fields = {}

    def add(self, name, width):
        self._fields[name] = (self.width, width)
        self.width += width
        return self

    def refs(self, name):
        start, width = self._fields[name]
        return list(range(start, start + width))

    def field_width(self, name):
        return self._fields[name][1]


class SatEncoder:
    def __init__(self, n):
        self.n = n
        self.lit_width = bits_for(2 * n)
        self.k_width = bits_for(2 * n + 3)
        f = _Fields()
        for t in range(3 * n):
            f.add(f"lit{t}", self.lit_width)
        for i in range(1, n + 1):
            f.add(f"v{i}", 1)
        f.add("k", self.k_width)
        self.state_width = f.width
        f.add("a", 1)
        self.fields = f
        self.total_width = f.width

    def state_bits(self, state):
        from mdpzoo.core.formulas import literal_code

        bits = []
        for clause in state.formula.clauses:
            for lit in clause:
                bits.extend(
                    int_to_bits(literal_code(lit, self.n) - 1, self.lit_width)
                )
        bits.extend(state.bits)
        bits.extend(int_to_bits(state.step, self.k_width))
        return tuple(bits)

    def action_bits(self, action):
        return (action,)


class NpEncoder:
    def __init__(self, spec):
        self.spec = spec
        self.bound = spec.step_bound
        self.q_width = bits_for(len(spec.states))
        self.sym_width = bits_for(len(spec.tape_alphabet))
        self.l_width = bits_for(self.bound)
        self.k_width = bits_for(2 * self.bound + 3)
        f = _Fields()
        f.add("q", self.q_width)
        for i in range(self.bound):
            f.add(f"t{i}", self.sym_width)
        f.add("l", self.l_width)
        f.add("k", self.k_width)
        self.state_width = f.width
        f.add("a", 1)
        self.fields = f
        self.total_width = f.width

    def state_bits(self, state):
        config = state.config
        bits = list(
            int_to_bits(self.spec.states.index(config.state), self.q_width)
        )
        for sym in config.tape:
            bits.extend(
                int_to_bits(self.spec.tape_alphabet.index(sym), self.sym_width)
            )
        bits.extend(int_to_bits(config.head, self.l_width))
        bits.extend(int_to_bits(state.step, self.k_width))
        return tuple(bits)

    def action_bits(self, action):
        return (action,)


class CvpEncoder:
    def __init__(self, n, max_ref=None, action_count=None, input_bits=0):
        self.n = n
        self.input_bits = input_bits
        self.ref_width = bits_for((max_ref if max_ref is not None else n) + 1)
        self.action_count = action_count if action_count is not None else n
        self.a_width = bits_for(self.action_count)
        f = _Fields()
        for i in range(1, input_bits + 1):
            f.add(f"x{i}", 1)
        for i in range(1, n + 1):
            f.add(f"in1_{i}", self.ref_width)
            f.add(f"in2_{i}", self.ref_width)
            f.add(f"g{i}", 3)
        for i in range(1, n + 1):
            f.add(f"v{i}", 2)
        self.state_width = f.width
        f.add("a", self.a_width)
        self.fields = f
        self.total_width = f.width

    def state_bits(self, state):
        bits = []
        if self.input_bits:
            bits.extend(state.input_bits)
        for node in state.circuit.nodes:
            bits.extend(int_to_bits(node.in1, self.ref_width))
            bits.extend(int_to_bits(node.in2, self.ref_width))
            bits.extend(int_to_bits(gate_code(node.gate) - 1, 3))
        for v in state.values:
            bits.extend(VALUE_BITS[v])
        return tuple(bits)

    def action_bits(self, action):
        return int_to_bits(action - 1, self.a_width)


def model_encoder(family, n, *, ndtm=None, size=None, step_bound=None):
    """The bit layout used by the model and policy circuit builders."""
    if family == "sat":
        return SatEncoder(n)
    if family == "np":
        if ndtm is None:
            raise InvalidInputError("np encoder needs the machine description")
        return NpEncoder(ndtm)
    if family == "cvp":
        return CvpEncoder(n)
    if family == "p":
        size = n if size is None else size
        step_bound = size if step_bound is None else step_bound
        return CvpEncoder(
            size,
            max_ref=max(size, n),
            action_count=step_bound,
            input_bits=n,
        )
    raise InvalidInputError(f"no encoder for family {family!r}")


# ---------------------------------------------------------------------------
# Model circuits


def build_model_circuit(family, n, *, ndtm=None, size=None, step_bound=None):
    """Reward and transition circuits over the family's bit layout.

    Returns (reward circuit, transition circuit).  The reward circuit has
    the 2-bit reward output; the transition circuit outputs the successor
    state's full encoding.
    """
    enc = model_encoder(family, n, ndtm=ndtm, size=size, step_bound=step_bound)
    if family == "sat":
        return _sat_reward_circuit(enc), _sat_transition_circuit(enc)
    if family == "np":
        return _np_reward_circuit(enc), _np_transition_circuit(enc)
    if family == "cvp":
        return _cvp_reward_circuit(enc), _cvp_transition_circuit(enc)
    if family == "p":
        return _cvp_reward_circuit(enc), _cvp_transition_circuit(enc)
    raise InvalidInputError(f"no model circuit builder for family {family!r}")


def _formula_value(b, enc):
    """Refs computing the formula value under the current assignment:
    substitute every literal, OR within clauses, AND across clauses."""
    n = enc.n
    clause_refs = []
    lit_values = []
    for t in range(3 * n):
        slot = enc.fields.refs(f"lit{t}")
        terms = []
        for j in range(1, n + 1):
            v_ref = enc.fields.refs(f"v{j}")[0]
            pos = b.indicator(slot, j - 1)  # literal code j encodes u_j
            neg = b.indicator(slot, n + j - 1)  # code n+j encodes ~u_j
            terms.append(b.AND([pos, v_ref]))
            terms.append(b.AND([neg, b.NOT(v_ref)]))
        lit_values.append(b.OR(terms))
    for c in range(n):
        clause_refs.append(b.OR(lit_values[3 * c : 3 * c + 3]))
    return b.AND(clause_refs)


def _sat_reward_circuit(enc):
    n = enc.n
    b = _Builder(enc.total_width)
    psi = _formula_value(b, enc)
    k_refs = enc.fields.refs("k")
    bit_one = b.AND([psi, b.indicator(k_refs, n + 1)])
    bit_half = b.indicator(k_refs, 2 * n + 2)
    return b.finish([bit_one, bit_half])


def _sat_transition_circuit(enc):
    n = enc.n
    b = _Builder(enc.total_width)
    a_ref = enc.fields.refs("a")[0]
    k_refs = enc.fields.refs("k")
    outputs = []
    for t in range(3 * n):
        outputs.extend(enc.fields.refs(f"lit{t}"))
    for i in range(1, n + 1):
        v_ref = enc.fields.refs(f"v{i}")[0]
        hit = b.indicator(k_refs, i)
        outputs.append(
            b.OR([b.AND([a_ref, hit]), b.AND([v_ref, b.NOT(hit)])])
        )
    table = {}
    for k in range(2 * n + 3):
        for a in (0, 1):
            if k == 0:
                k_next = 1 if a == 1 else n + 2
            else:
                k_next = min(k + 1, 2 * n + 2)
            table[k + (a << enc.k_width)] = k_next
    outputs.extend(b.lookup(k_refs + [a_ref], table, enc.k_width))
    return b.finish(outputs)


def _np_reward_circuit(enc):
    spec = enc.spec
    bound = enc.bound
    b = _Builder(enc.total_width)
    q_refs = enc.fields.refs("q")
    k_refs = enc.fields.refs("k")
    accept_code = spec.states.index(spec.accept)
    bit_one = b.AND(
        b.literals(q_refs, int_to_bits(accept_code, enc.q_width))
        + [b.indicator(k_refs, bound + 1)]
    )
    bit_half = b.indicator(k_refs, 2 * bound + 2)
    return b.finish([bit_one, bit_half])


def _np_transition_circuit(enc):
    spec = enc.spec
    bound = enc.bound
    b = _Builder(enc.total_width)
    q_refs = enc.fields.refs("q")
    l_refs = enc.fields.refs("l")
    k_refs = enc.fields.refs("k")
    a_ref = enc.fields.refs("a")[0]

    # symbol under the head, bit by bit
    head_at = [b.indicator(l_refs, i) for i in range(bound)]
    chi = []
    for bit in range(enc.sym_width):
        chi.append(
            b.OR(
                [
                    b.AND([head_at[i], enc.fields.refs(f"t{i}")[bit]])
                    for i in range(bound)
                ]
            )
        )
    in_range = b.OR([b.indicator(k_refs, k) for k in range(1, bound + 1)])

    # machine step: (state, symbol, branch, in-range flag) -> (state', written
    # symbol, move); absorbing states and out-of-range steps leave everything
    # in place
    absorbing = {spec.accept, spec.halt}
    table = {}
    for qi, qname in enumerate(spec.states):
        for si, sym in enumerate(spec.tape_alphabet):
            for a in (0, 1):
                for ir in (0, 1):
                    if ir and qname not in absorbing:
                        delta = spec.delta1 if a else spec.delta0
                        nstate, wsym, move = delta[(qname, sym)]
                        out = (
                            spec.states.index(nstate),
                            spec.tape_alphabet.index(wsym),
                            MOVE_OFFSET[move] + 1,
                        )
                    else:
                        out = (qi, si, 1)
                    key = qi + (si << enc.q_width) + (a << enc.q_width + enc.sym_width)
                    key += ir << (enc.q_width + enc.sym_width + 1)
                    packed = out[0] + (out[1] << enc.q_width)
                    packed += out[2] << (enc.q_width + enc.sym_width)
                    table[key] = packed
    step_out = b.lookup(
        q_refs + chi + [a_ref, in_range],
        table,
        enc.q_width + enc.sym_width + 2,
    )
    q_next = step_out[: enc.q_width]
    written = step_out[enc.q_width : enc.q_width + enc.sym_width]
    move_refs = step_out[enc.q_width + enc.sym_width :]

    outputs = list(q_next)
    for i in range(bound):
        write_here = b.AND([head_at[i], in_range])
        keep = b.NOT(write_here)
        for bit in range(enc.sym_width):
            t_ref = enc.fields.refs(f"t{i}")[bit]
            outputs.append(
                b.OR([b.AND([written[bit], write_here]), b.AND([t_ref, keep])])
            )
    # head update: l' = l + move - 1, defined where the result stays on tape
    l_table = {}
    for l in range(bound):
        for move in (0, 1, 2):
            l2 = l + move - 1
            if 0 <= l2 < bound:
                l_table[l + (move << enc.l_width)] = l2
    outputs.extend(b.lookup(l_refs + move_refs, l_table, enc.l_width))
    k_table = {}
    for k in range(2 * bound + 3):
        for a in (0, 1):
            if k == 0:
                k_next = 1 if a == 1 else bound + 2
            else:
                k_next = min(k + 1, 2 * bound + 2)
            k_table[k + (a << enc.k_width)] = k_next
    outputs.extend(b.lookup(k_refs + [a_ref], k_table, enc.k_width))
    return b.finish(outputs)


def _cvp_reward_circuit(enc):
    b = _Builder(enc.total_width)
    n = enc.n
    computed = [b.NOT(enc.fields.refs(f"v{i}")[1]) for i in range(1, n + 1)]
    out_lo, out_hi = enc.fields.refs(f"v{n}")
    bit_one = b.AND(computed + [out_lo])
    bit_half = b.const0()
    return b.finish([bit_one, bit_half])


def _node_output_table(with_input):
    """(gate code-1, val1, val2[, x bit]) -> output value code, per the
    gate semantics with unknown propagation."""
    table = {}
    kinds = GATE_KINDS if with_input else GATE_KINDS[:5]
    for kind in kinds:
        gc = gate_code(kind) - 1
        for v1 in range(3):
            for v2 in range(3):
                xs = (0, 1) if with_input else (0,)
                for x in xs:
                    val1 = None if v1 == 2 else v1
                    val2 = None if v2 == 2 else v2
                    if kind == "CONST0":
                        out = 0
                    elif kind == "CONST1":
                        out = 1
                    elif kind == "INPUT":
                        out = x
                    elif kind == "NOT":
                        out = None if val1 is None else 1 - val1
                    elif val1 is None or val2 is None:
                        out = None
                    elif kind == "AND":
                        out = val1 & val2
                    else:
                        out = val1 | val2
                    key = gc + (v1 << 3) + (v2 << 5)
                    if with_input:
                        key += x << 7
                    code = 2 if out is None else out
                    table[key] = code
    return table


def _cvp_transition_circuit(enc):
    """Transition circuit shared by the pure-circuit family and the
    string-recognition family (the encoder carries the input bits)."""
    n = enc.n
    with_input = enc.input_bits > 0
    b = _Builder(enc.total_width)
    a_refs = enc.fields.refs("a")
    act_is = {j: b.indicator(a_refs, j - 1) for j in range(1, n + 1)}

    # fetch the targeted node description
    def fetch(field_fmt, width):
        out = []
        for bit in range(width):
            out.append(
                b.OR(
                    [
                        b.AND([act_is[j], enc.fields.refs(field_fmt.format(j))[bit]])
                        for j in range(1, n + 1)
                    ]
                )
            )
        return out

    g_refs = fetch("g{}", 3)

    # fetch the value of each referenced node: one minterm per (node,
    # referenced index) pair, collapsed into a single AND layer
    def fetch_value(in_field):
        out = []
        for bit in range(2):
            terms = []
            for j in range(1, n + 1):
                ref_refs = enc.fields.refs(in_field.format(j))
                for m in range(1, n + 1):
                    terms.append(
                        b.AND(
                            b.literals(a_refs, int_to_bits(j - 1, enc.a_width))
                            + b.literals(ref_refs, int_to_bits(m, enc.ref_width))
                            + [enc.fields.refs(f"v{m}")[bit]]
                        )
                    )
            out.append(b.OR(terms))
        return out

    val1 = fetch_value("in1_{}")
    val2 = fetch_value("in2_{}")

    lookup_in = g_refs + val1 + val2
    if with_input:
        x_terms = []
        for j in range(1, n + 1):
            ref_refs = enc.fields.refs(f"in1_{j}")
            for m in range(1, enc.input_bits + 1):
                x_terms.append(
                    b.AND(
                        b.literals(a_refs, int_to_bits(j - 1, enc.a_width))
                        + b.literals(ref_refs, int_to_bits(m, enc.ref_width))
                        + [enc.fields.refs(f"x{m}")[0]]
                    )
                )
        lookup_in = lookup_in + [b.OR(x_terms)]

    raw = _node_output_table(with_input)
    table = {}
    for key, code in raw.items():
        gc = key & 7
        v1 = (key >> 3) & 3
        v2 = (key >> 5) & 3
        rest = key >> 7
        lo1, hi1 = VALUE_BITS[None if v1 == 2 else v1]
        lo2, hi2 = VALUE_BITS[None if v2 == 2 else v2]
        bits_key = gc + (lo1 << 3) + (hi1 << 4) + (lo2 << 5) + (hi2 << 6)
        bits_key += rest << 7
        lo, hi = VALUE_BITS[None if code == 2 else code]
        table[bits_key] = lo + (hi << 1)
    obar = b.lookup(lookup_in, table, 2)

    outputs = []
    for i in range(1, enc.input_bits + 1):
        outputs.extend(enc.fields.refs(f"x{i}"))
    for i in range(1, n + 1):
        outputs.extend(enc.fields.refs(f"in1_{i}"))
        outputs.extend(enc.fields.refs(f"in2_{i}"))
        outputs.extend(enc.fields.refs(f"g{i}"))
    for i in range(1, n + 1):
        keep = b.NOT(act_is[i])
        for bit in range(2):
            v_ref = enc.fields.refs(f"v{i}")[bit]
            outputs.append(
                b.OR([b.AND([obar[bit], act_is[i]]), b.AND([v_ref, keep])])
            )
    return b.finish(outputs)


# ---------------------------------------------------------------------------
# Policy circuits


def build_policy_circuit(family, n, *, size=None, step_bound=None):
    """Binary encoding of the smallest computable-but-uncomputed node
    index (the action encoding, i.e. index-1), with the all-computed
    fallback encoding the largest action."""
    if family == "cvp":
        enc = CvpEncoder(n)
        fallback = n
    elif family == "p":
        enc = model_encoder("p", n, size=size, step_bound=step_bound)
        fallback = enc.action_count
    else:
        raise InvalidInputError(f"no policy circuit builder for family {family!r}")
    with_input = enc.input_bits > 0
    b = _Builder(enc.state_width)
    m = enc.n

    def fetch_value_for(i, in_field):
        out = []
        ref_refs = enc.fields.refs(in_field)
        for bit in range(2):
            out.append(
                b.OR(
                    [
                        b.AND(
                            b.literals(
                                ref_refs, int_to_bits(node, enc.ref_width)
                            )
                            + [enc.fields.refs(f"v{node}")[bit]]
                        )
                        for node in range(1, m + 1)
                    ]
                )
            )
        return out

    # membership table over (gate, val1, val2, own value): computable and
    # not yet computed
    member_table = {}
    kinds = GATE_KINDS if with_input else GATE_KINDS[:5]
    for kind in kinds:
        gc = gate_code(kind) - 1
        for v1 in (0, 1, None):
            for v2 in (0, 1, None):
                for own in (0, 1, None):
                    if own is not None:
                        member = 0
                    elif kind in ("CONST0", "CONST1", "INPUT"):
                        member = 1
                    elif kind == "NOT":
                        member = int(v1 is not None)
                    else:
                        member = int(v1 is not None and v2 is not None)
                    lo1, hi1 = VALUE_BITS[v1]
                    lo2, hi2 = VALUE_BITS[v2]
                    loo, hio = VALUE_BITS[own]
                    key = gc + (lo1 << 3) + (hi1 << 4) + (lo2 << 5) + (hi2 << 6)
                    key += (loo << 7) + (hio << 8)
                    member_table[key] = member
    members = []
    for i in range(1, m + 1):
        val1 = fetch_value_for(i, f"in1_{i}")
        val2 = fetch_value_for(i, f"in2_{i}")
        refs = (
            enc.fields.refs(f"g{i}") + val1 + val2 + enc.fields.refs(f"v{i}")
        )
        members.append(b.lookup(refs, member_table, 1)[0])

    chosen = []  # chosen[i] = member i and no smaller member
    for i in range(m):
        if i == 0:
            chosen.append(members[0])
        else:
            chosen.append(b.AND([b.NOT(b.OR(members[:i])), members[i]]))
    none_member = b.NOT(b.OR(members))

    out_width = enc.a_width
    outputs = []
    for bit in range(out_width):
        terms = [
            chosen[i] for i in range(m) if (i >> bit) & 1  # action code i = index i+1
        ]
        if ((fallback - 1) >> bit) & 1:
            terms.append(none_member)
        outputs.append(b.OR(terms))
    return b.finish(outputs)


def decode_policy_action(bits):
    return bits_to_int(bits) + 1


# ---------------------------------------------------------------------------
# Size/depth accounting

# Exponent bounds for the log-log size fit, from counting the dominant
# gate groups in each builder (quadratic fan-outs for the fetch layers,
# linear elsewhere).
DECLARED_SIZE_EXPONENTS = {
    "sat-reward": 2,
    "sat-transition": 2,
    "np-reward": 1,
    "np-transition": 2,
    "cvp-reward": 1,
    "cvp-transition": 2,
    "p-reward": 1,
    "p-transition": 2,
    "cvp-policy": 2,
    "p-policy": 2,
}


def fitted_size_exponent(ns, sizes):
    """Least-squares slope of log size against log n."""
    slope, _ = np.polyfit(np.log(np.array(ns, float)), np.log(np.array(sizes, float)), 1)
    return float(slope)


def stats_csv(rows):
    """CSV of (n, size, depth) rows."""
    lines = ["n,size,depth"]
    for n, st in rows:
        lines.append(f"{n},{st.size},{st.depth}")
    return "\n".join(lines) + "\n"
