"""Fixed-precision ReLU networks and the constructive builders that turn
the MDP models and circuit-family policies into explicit weight matrices.

A network is a sequence of affine layers with ReLU between them and an
affine final layer.  The forward pass rounds every intermediate to a
fixed-point grid (precision_bits fractional bits, round-half-to-even,
32 integer bits of headroom); an exact Fraction pass is available for
cross-checks.  All builders produce weights that are integers, halves, or
small dyadics, and keep every reachable intermediate on the grid, so the
quantized and exact passes coincide on the inputs that matter.

Builders compose a handful of pieces:

* gate gadgets (AND/OR/NOT/MAJ as fixed ReLU formulas);
* the lookup network: an arbitrary function on a finite domain realized
  in three ReLU layers plus an affine read-out, using half the minimum
  pairwise L-infinity gap (rounded down to a power of two) as the
  separation scale;
* per-family state/action embeddings (integer codes, documented below);
* affine plumbing (parallel blocks, identity passthroughs, composition).

Embedding layouts: the formula family uses literal codes 1..2n (variable
i and its negation map to i and i+n), assignment bits, and the raw step
counter, giving 4n+1 dimensions per state plus a scalar action.  The
machine family uses 1-based state and symbol codes, the raw head index,
and the counter (P+3 dims).  The circuit families use per-node triples
(in1, in2, gate code 1..6, with 0 in unused slots) and node-value codes
{0 -> 1, 1 -> 2, unknown -> 3}; the string family prefixes the input bits
and pads the circuit description and value vector with zeros out to the
padded action-space size.
"""

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from mdpzoo.core.circuits import GATE_KINDS, gate_code
from mdpzoo.core.formulas import literal_code
from mdpzoo.core.ndtm import MOVE_OFFSET
from mdpzoo.errors import FixedPointOverflowError, InvalidInputError

INT_BITS = 32  # fixed headroom; overflow past this raises

VALUE_CODES = {0: 1, 1: 2, None: 3}
PAD_CODE = 0


@dataclass(frozen=True)
class Mlp:
    """layers[i] = (W, b); ReLU after every layer except the last."""

    layers: tuple
    precision_bits: int = 16

    @property
    def depth(self):
        return len(self.layers)

    @property
    def input_dim(self):
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self):
        return self.layers[-1][0].shape[0]

    @property
    def max_hidden(self):
        dims = [W.shape[0] for W, _ in self.layers[:-1]]
        return max(dims) if dims else 0

    def with_precision(self, bits):
        return Mlp(self.layers, bits)

    def to_json(self):
        return {
            "layers": [
                {"w": W.tolist(), "b": b.tolist()} for W, b in self.layers
            ],
            "precisionBits": self.precision_bits,
        }

    @classmethod
    def from_json(cls, data):
        try:
            layers = tuple(
                (np.array(d["w"], dtype=float), np.array(d["b"], dtype=float))
                for d in data["layers"]
            )
            return cls(layers, int(data["precisionBits"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed MLP JSON: {exc}") from exc


def _quantize(vec, bits, layer_idx):
    scaled = vec * (1 << bits)
    rounded = np.round(scaled)  # round-half-to-even
    if np.any(np.abs(rounded) >= float(1 << (bits + INT_BITS))):
        raise FixedPointOverflowError(
            f"value exceeds {INT_BITS} integer bits", layer=layer_idx
        )
    return rounded / (1 << bits)


def mlp_forward(mlp, x, exact=False):
    """Forward pass; quantized to the fixed-point grid unless exact=True.

    The exact pass runs in Fractions and is meant for small gadgets.
    """
    if len(x) != mlp.input_dim:
        raise InvalidInputError(
            f"input length {len(x)} != expected {mlp.input_dim}"
        )
    if exact:
        h = [Fraction(v) for v in x]
        for idx, (W, b) in enumerate(mlp.layers):
            rows = []
            for r in range(W.shape[0]):
                acc = Fraction(b[r])
                for c in range(W.shape[1]):
                    w = W[r, c]
                    if w:
                        acc += Fraction(w) * h[c]
                rows.append(acc)
            if idx < len(mlp.layers) - 1:
                rows = [max(v, Fraction(0)) for v in rows]
            h = rows
        return tuple(h)
    h = np.array(x, dtype=float)
    h = _quantize(h, mlp.precision_bits, 0)
    for idx, (W, b) in enumerate(mlp.layers):
        h = W @ h + b
        if idx < len(mlp.layers) - 1:
            h = np.maximum(h, 0.0)
        h = _quantize(h, mlp.precision_bits, idx + 1)
    return tuple(h.tolist())


# ---------------------------------------------------------------------------
# Affine/ReLU plumbing.  Every Mlp ends in an affine layer; composition
# merges adjacent affine maps, so stacking stages never inserts stray
# ReLUs.  Identity padding uses ReLU identities and therefore assumes the
# padded branch carries nonnegative values, which holds for every stage
# output here (codes, bits, counters, indicator sums).


def _affine(W, b=None):
    W = np.atleast_2d(np.array(W, dtype=float))
    if b is None:
        b = np.zeros(W.shape[0])
    return Mlp(((W, np.array(b, dtype=float)),))


def _identity(dim):
    return Mlp(((np.eye(dim), np.zeros(dim)),))


def _select(dim_in, idxs):
    W = np.zeros((len(idxs), dim_in))
    for r, c in enumerate(idxs):
        W[r, c] = 1.0
    return Mlp(((W, np.zeros(len(idxs))),))


def _pad_depth(mlp, depth):
    need = depth - mlp.depth
    if need <= 0:
        return mlp
    if mlp.depth == 1:
        dim = mlp.input_dim
        pads = tuple((np.eye(dim), np.zeros(dim)) for _ in range(need))
        return Mlp(pads + mlp.layers, mlp.precision_bits)
    mid = mlp.layers[-2][0].shape[0]
    pads = tuple((np.eye(mid), np.zeros(mid)) for _ in range(need))
    return Mlp(mlp.layers[:-1] + pads + mlp.layers[-1:], mlp.precision_bits)


def _parallel(parts):
    """Stack networks over one shared input; outputs are concatenated."""
    depth = max(p.depth for p in parts)
    parts = [_pad_depth(p, depth) for p in parts]
    layers = []
    for li in range(depth):
        ws = [p.layers[li][0] for p in parts]
        bs = [p.layers[li][1] for p in parts]
        if li == 0:
            W = np.vstack(ws)
        else:
            W = _block_diag(ws)
        layers.append((W, np.concatenate(bs)))
    return Mlp(tuple(layers))


def _block_diag(mats):
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r : r + m.shape[0], c : c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def _compose(first, second):
    """second after first, merging the affine boundary between them."""
    Wf, bf = first.layers[-1]
    Wg, bg = second.layers[0]
    merged = (Wg @ Wf, Wg @ bf + bg)
    return Mlp(first.layers[:-1] + (merged,) + second.layers[1:])


def _chain(*stages):
    out = stages[0]
    for stage in stages[1:]:
        out = _compose(out, stage)
    return out


# ---------------------------------------------------------------------------
# Gate gadgets


def build_gate_mlp(kind, fanin):
    """The fixed ReLU formulas for AND, OR, NOT (fanin 1), and MAJORITY."""
    if fanin < 1:
        raise InvalidInputError("fanin must be at least 1")
    ones = np.ones((1, fanin))
    if kind == "AND":
        return _relu(_affine(ones, [1 - fanin]))
    if kind == "OR":
        hidden = _affine(-ones, [1.0])
        return _compose(_relu(hidden), _affine(-np.eye(1), [1.0]))
    if kind == "NOT":
        if fanin != 1:
            raise InvalidInputError("NOT takes exactly one input")
        hidden = _affine(-np.eye(1), [1.0])
        return _compose(_relu(hidden), _affine(np.eye(1)))
    if kind == "MAJ":
        W = np.vstack([2 * ones, 2 * ones])
        hidden = _affine(W, [-fanin, -fanin - 1])
        return _compose(_relu(hidden), _affine(np.array([[1.0, -1.0]])))
    raise InvalidInputError(f"unknown gate kind {kind!r}")


def _relu(affine_mlp):
    """Mark a single affine map as a hidden (ReLU) layer by appending an
    identity read-out."""
    dim = affine_mlp.output_dim
    return _compose(affine_mlp, _pad_depth(_identity(dim), 2))


# ---------------------------------------------------------------------------
# Lookup networks


def build_lookup_mlp(domain, table, delta=None):
    """Exact network for an arbitrary function on a finite domain.

    `domain` is a sequence of distinct equal-length numeric vectors;
    `table` maps each domain point (as a tuple) to a number or a vector.
    The separation scale defaults to the largest power of two at most the
    minimum pairwise L-infinity distance, which keeps the weights dyadic.
    """
    points = [tuple(float(c) for c in p) for p in domain]
    if not points:
        raise InvalidInputError("domain must be non-empty")
    dim = len(points[0])
    if any(len(p) != dim for p in points):
        raise InvalidInputError("domain points must share a dimension")
    if len(set(points)) != len(points):
        raise InvalidInputError("domain points must be distinct")
    if delta is None:
        delta = _separation(points)

    values = []
    out_dim = None
    for p in points:
        val = table(p) if callable(table) else table[p]
        row = np.atleast_1d(np.array(val, dtype=float))
        if out_dim is None:
            out_dim = row.shape[0]
        elif row.shape[0] != out_dim:
            raise InvalidInputError("table values must share a dimension")
        values.append(row)

    m = len(points)
    pts = np.array(points)
    # layer 1: p_{u,i} = ReLU(x_i - u_i), q_{u,i} = ReLU(u_i - x_i + delta)
    W1 = np.zeros((2 * m * dim, dim))
    b1 = np.zeros(2 * m * dim)
    for t in range(m):
        for i in range(dim):
            W1[t * dim + i, i] = 1.0
            b1[t * dim + i] = -pts[t, i]
            W1[m * dim + t * dim + i, i] = -1.0
            b1[m * dim + t * dim + i] = pts[t, i] + delta
    # layer 2: f_{u,i} = ReLU(2 delta - 2 p - q)
    W2 = np.zeros((m * dim, 2 * m * dim))
    b2 = np.full(m * dim, 2.0 * delta)
    for t in range(m):
        for i in range(dim):
            W2[t * dim + i, t * dim + i] = -2.0
            W2[t * dim + i, m * dim + t * dim + i] = -1.0
    # layer 3: f_u = ReLU(sum_i f_{u,i} - (dim-1) delta)
    W3 = np.zeros((m, m * dim))
    b3 = np.full(m, -(dim - 1) * delta)
    for t in range(m):
        W3[t, t * dim : (t + 1) * dim] = 1.0
    # read-out: y = sum_u f(u)/delta * f_u
    W4 = np.stack(values, axis=1) / delta
    b4 = np.zeros(out_dim)
    return Mlp(((W1, b1), (W2, b2), (W3, b3), (W4, b4)))


def _separation(points):
    pts = np.array(points)
    if len(pts) == 1:
        return 1.0
    best = None
    for i in range(len(pts) - 1):
        gaps = np.max(np.abs(pts[i + 1 :] - pts[i]), axis=1)
        g = float(np.min(gaps))
        best = g if best is None else min(best, g)
    if best <= 0:
        raise InvalidInputError("domain points must be distinct")
    return float(2 ** np.floor(np.log2(best)))


def _grid(*ranges):
    """Product domain tuples over the given per-coordinate value lists."""
    out = [()]
    for values in ranges:
        out = [p + (v,) for p in out for v in values]
    return out


def _table_lookup(in_dim, selector_idxs, ranges, fn):
    """Lookup stage over selected coordinates of a wider vector."""
    domain = _grid(*ranges)
    table = {p: fn(*p) for p in domain}
    look = build_lookup_mlp(domain, table, delta=1.0)
    return _compose(_select(in_dim, selector_idxs), look)


# ---------------------------------------------------------------------------
# Embeddings


def embed_state(family, state):
    """Per-family integer embedding of a state; injective on reachable
    states of one family instance."""
    name = family.family
    if name in ("sat", "stoch-sat"):
        n = family.n
        codes = []
        for clause in state.formula.clauses:
            for lit in clause:
                codes.append(literal_code(lit, n))
        return tuple(codes) + tuple(state.bits) + (state.step,)
    if name == "np":
        spec = family.spec
        config = state.config
        return (
            (spec.states.index(config.state) + 1,)
            + tuple(spec.tape_alphabet.index(s) + 1 for s in config.tape)
            + (config.head, state.step)
        )
    if name in ("cvp", "stoch-cvp"):
        return _embed_circuit(state.circuit, state.values, family.n)
    if name == "p":
        return (
            tuple(state.input_bits)
            + _embed_circuit(state.circuit, state.values, family.bound)
        )
    raise InvalidInputError(f"no embedding for family {name!r}")


def _embed_circuit(circuit, values, padded_size):
    desc = []
    for node in circuit.nodes:
        desc.extend((node.in1, node.in2, gate_code(node.gate)))
    desc.extend((PAD_CODE,) * (3 * (padded_size - circuit.size)))
    vals = [VALUE_CODES[v] for v in values]
    vals.extend((PAD_CODE,) * (padded_size - circuit.size))
    return tuple(desc) + tuple(vals)


def embed_action(family, action):
    """Actions embed as a single scalar (bit, index, or advance code)."""
    return (int(action),)


def embed_successor(family, outcome_state):
    return embed_state(family, outcome_state)


# ---------------------------------------------------------------------------
# Model networks


def build_model_mlp(family, n, *, ndtm=None, size=None, step_bound=None):
    """(reward network, transition network) over the family's embeddings.

    The reward network maps (state embedding, action) to the scalar
    reward; the transition network maps it to the successor embedding.
    """
    if family == "sat":
        return _sat_reward_mlp(n), _sat_transition_mlp(n)
    if family == "np":
        if ndtm is None:
            raise InvalidInputError("np builder needs the machine description")
        return _np_reward_mlp(ndtm), _np_transition_mlp(ndtm)
    if family == "cvp":
        return (
            _circuit_reward_mlp(0, n, n, n),
            _circuit_transition_mlp(0, n, n, n),
        )
    if family == "p":
        size = n if size is None else size
        step_bound = size if step_bound is None else step_bound
        return (
            _circuit_reward_mlp(n, size, step_bound, max(size, n)),
            _circuit_transition_mlp(n, size, step_bound, max(size, n)),
        )
    raise InvalidInputError(f"no model network builder for family {family!r}")


def _sat_dims(n):
    # input: 3n literal codes, n bits, counter, action
    return 4 * n + 2


def _sat_formula_value_stage(n, dim):
    """Stages computing (formula value, counter, action) from the input."""
    lit_idx = list(range(3 * n))
    v_idx = list(range(3 * n, 4 * n))
    k_idx = 4 * n
    a_idx = 4 * n + 1

    # stage A: one-hot of each literal slot over the 2n codes, plus v/k/a
    onehot_table = {}
    for c in range(1, 2 * n + 1):
        onehot_table[(float(c),)] = tuple(
            1.0 if c == d else 0.0 for d in range(1, 2 * n + 1)
        )
    slots = [
        _compose(
            _select(dim, [t]),
            build_lookup_mlp([(c,) for c in range(1, 2 * n + 1)], onehot_table, 1.0),
        )
        for t in lit_idx
    ]
    stage_a = _parallel(slots + [_select(dim, v_idx + [k_idx, a_idx])])
    # layout after A: 3n blocks of 2n one-hots, then v (n), k, a
    width_a = 3 * n * 2 * n + n + 2
    v_off = 3 * n * 2 * n
    k_off, a_off = v_off + n, v_off + n + 1

    # stage B: literal values via ReLU(v_i + pos - 1) and ReLU(neg - v_i)
    rows = []
    biases = []
    for t in range(3 * n):
        base = t * 2 * n
        for i in range(n):
            row = np.zeros(width_a)
            row[base + i] = 1.0
            row[v_off + i] = 1.0
            rows.append(row)
            biases.append(-1.0)
        for i in range(n):
            row = np.zeros(width_a)
            row[base + n + i] = 1.0
            row[v_off + i] = -1.0
            rows.append(row)
            biases.append(0.0)
    hidden = np.array(rows)
    sum_w = np.zeros((3 * n, hidden.shape[0]))
    for t in range(3 * n):
        sum_w[t, t * 2 * n : (t + 1) * 2 * n] = 1.0
    lit_stage = Mlp(((hidden, np.array(biases)), (sum_w, np.zeros(3 * n))))
    stage_b = _parallel([lit_stage, _select(width_a, [k_off, a_off])])
    # layout after B: 3n literal values, k, a

    # stage C: clause disjunctions capped at 1, then the conjunction
    width_b = 3 * n + 2
    z_rows = np.zeros((2 * n, width_b))
    z_b = np.zeros(2 * n)
    for c in range(n):
        z_rows[c, 3 * c : 3 * c + 3] = 1.0
        z_rows[n + c, 3 * c : 3 * c + 3] = 1.0
        z_b[n + c] = -1.0
    psi_row = np.zeros((1, 2 * n))
    psi_row[0, :n] = 1.0
    psi_row[0, n:] = -1.0
    conj = Mlp(
        (
            (z_rows, z_b),
            (psi_row, np.array([1.0 - n])),
            (np.eye(1), np.zeros(1)),
        )
    )
    stage_c = _parallel([conj, _select(width_b, [3 * n, 3 * n + 1])])
    # layout after C: formula value, k, a
    return _chain(stage_a, stage_b, stage_c)


def _sat_reward_mlp(n):
    dim = _sat_dims(n)
    stages = _sat_formula_value_stage(n, dim)
    k_range = list(range(2 * n + 3))
    reward = _table_lookup(
        3,
        [0, 1],
        ((0, 1), k_range),
        lambda sat, k: 1.0 if (sat == 1 and k == n + 1) else (0.5 if k == 2 * n + 2 else 0.0),
    )
    return _chain(stages, reward)


def _sat_transition_mlp(n):
    dim = _sat_dims(n)
    k_range = list(range(2 * n + 3))
    parts = [_select(dim, list(range(3 * n)))]  # formula description unchanged
    for i in range(1, n + 1):
        parts.append(
            _table_lookup(
                dim,
                [3 * n + i - 1, 4 * n, 4 * n + 1],
                ((0, 1), k_range, (0, 1)),
                lambda v, k, a, i=i: float(a) if k == i else float(v),
            )
        )
    parts.append(
        _table_lookup(
            dim,
            [4 * n, 4 * n + 1],
            (k_range, (0, 1)),
            lambda k, a: float(
                (1 if a == 1 else n + 2) if k == 0 else min(k + 1, 2 * n + 2)
            ),
        )
    )
    return _parallel(parts)


def _np_reward_mlp(spec):
    bound = spec.step_bound
    dim = bound + 4
    accept_code = spec.states.index(spec.accept) + 1
    q_range = range(1, len(spec.states) + 1)
    k_range = range(2 * bound + 3)
    return _table_lookup(
        dim,
        [0, bound + 2],
        (tuple(q_range), tuple(k_range)),
        lambda q, k: 1.0
        if (q == accept_code and k == bound + 1)
        else (0.5 if k == 2 * bound + 2 else 0.0),
    )


def _np_transition_mlp(spec):
    bound = spec.step_bound
    dim = bound + 4
    n_syms = len(spec.tape_alphabet)
    sym_range = tuple(range(1, n_syms + 1))
    head_range = tuple(range(bound))
    q_range = tuple(range(1, len(spec.states) + 1))
    k_range = tuple(range(2 * bound + 3))
    q_idx, l_idx, k_idx, a_idx = 0, bound + 1, bound + 2, bound + 3
    t_idx = lambda i: 1 + i

    # stage A: symbol under the head (sum of per-cell masked codes) plus a
    # passthrough of the whole input
    cell_parts = [
        _table_lookup(
            dim,
            [t_idx(i), l_idx],
            (sym_range, head_range),
            lambda sym, l, i=i: float(sym) if l == i else 0.0,
        )
        for i in range(bound)
    ]
    stage_a = _parallel([_identity(dim)] + cell_parts)
    sum_row = np.zeros((dim + 1, dim + bound))
    sum_row[:dim, :dim] = np.eye(dim)
    sum_row[dim, dim:] = 1.0
    stage_a = _compose(stage_a, _affine(sum_row))
    chi_idx = dim  # layout after A: input coords, then the head symbol

    # stage B: one lookup over (state, head symbol, action, counter) giving
    # the new state, the shifted symbol delta, the shifted head move, and
    # the counter update
    absorbing = {spec.accept, spec.halt}
    shift = n_syms

    def machine_step(q, chi, a, k):
        qname = spec.states[int(q) - 1]
        sym = spec.tape_alphabet[int(chi) - 1]
        advance = 1 <= k <= bound and qname not in absorbing
        if advance:
            delta = spec.delta1 if a else spec.delta0
            nstate, wsym, move = delta[(qname, sym)]
            q2 = spec.states.index(nstate) + 1
            dw = spec.tape_alphabet.index(wsym) + 1 - int(chi)
            dl = MOVE_OFFSET[move]
        else:
            q2, dw, dl = int(q), 0, 0
        if k == 0:
            k2 = 1 if a == 1 else bound + 2
        else:
            k2 = min(k + 1, 2 * bound + 2)
        return (float(q2), float(dw + shift), float(dl + 1), float(k2))

    step_lookup = _table_lookup(
        dim + 1,
        [q_idx, chi_idx, a_idx, k_idx],
        (q_range, sym_range, (0, 1), k_range),
        machine_step,
    )
    stage_b = _parallel(
        [
            step_lookup,
            _select(dim + 1, [t_idx(i) for i in range(bound)] + [l_idx]),
        ]
    )
    # layout after B: q', dw+shift, dl+1, k', tape cells, head
    width_b = 4 + bound + 1
    dw_idx, dl_idx = 1, 2
    tape_off = 4
    l2_idx = tape_off + bound

    # stage C: per-cell symbol delta (dw masked to the head position)
    dw_range = tuple(range(2 * n_syms))
    cell_deltas = [
        _table_lookup(
            width_b,
            [l2_idx, dw_idx],
            (head_range, dw_range),
            lambda l, dws, i=i: float(dws - shift) if l == i else 0.0,
        )
        for i in range(bound)
    ]
    stage_c = _parallel([_identity(width_b)] + cell_deltas)

    # final affine assembly: (q', tape + deltas, head + move - 1, k')
    out = np.zeros((bound + 3, width_b + bound))
    bias = np.zeros(bound + 3)
    out[0, 0] = 1.0  # q'
    for i in range(bound):
        out[1 + i, tape_off + i] = 1.0
        out[1 + i, width_b + i] = 1.0
    out[bound + 1, l2_idx] = 1.0
    out[bound + 1, dl_idx] = 1.0
    bias[bound + 1] = -1.0
    out[bound + 2, 3] = 1.0  # k'
    return _chain(stage_a, stage_b, stage_c, _affine(out, bias))


def _circuit_dims(input_bits, padded):
    return input_bits + 4 * padded + 1


def _circuit_reward_mlp(input_bits, size, padded, max_ref):
    """Reward 1 iff every real node is computed and the output node holds
    a 1 (value codes: 0 pad, 1/2 bits, 3 unknown)."""
    dim = _circuit_dims(input_bits, padded)
    v_off = input_bits + 3 * padded
    parts = []
    for i in range(padded):
        parts.append(
            _table_lookup(
                dim,
                [v_off + i],
                ((PAD_CODE, 1, 2, 3),),
                lambda v: 0.0 if v == 3 else 1.0,
            )
        )
    parts.append(
        _table_lookup(
            dim,
            [v_off + size - 1],
            ((PAD_CODE, 1, 2, 3),),
            lambda v: 1.0 if v == 2 else 0.0,
        )
    )
    gather = _parallel(parts)
    final = Mlp(
        (
            (np.ones((1, padded + 1)), np.array([-float(padded)])),
            (np.eye(1), np.zeros(1)),
        )
    )
    return _compose(gather, final)


def _circuit_transition_mlp(input_bits, size, padded, max_ref):
    dim = _circuit_dims(input_bits, padded)
    node_off = input_bits
    v_off = input_bits + 3 * padded
    a_idx = dim - 1
    in1 = lambda j: node_off + 3 * j
    in2 = lambda j: node_off + 3 * j + 1
    gat = lambda j: node_off + 3 * j + 2
    actions = tuple(range(1, padded + 1))
    ref_range = tuple(range(max_ref + 1))
    gate_range = tuple(range(7))
    vcode_range = (PAD_CODE, 1, 2, 3)

    # stage A: fetch the addressed node's description (masked sums)
    def masked(field_idx, values):
        return [
            _table_lookup(
                dim,
                [field_idx(j), a_idx],
                (values, actions),
                lambda x, a, j=j: float(x) if a == j + 1 else 0.0,
            )
            for j in range(padded)
        ]

    stage_a_parts = [_identity(dim)]
    stage_a_parts += masked(in1, ref_range)
    stage_a_parts += masked(in2, ref_range)
    stage_a_parts += masked(gat, gate_range)
    stage_a = _parallel(stage_a_parts)
    fold = np.zeros((dim + 3, dim + 3 * padded))
    fold[:dim, :dim] = np.eye(dim)
    for blk in range(3):
        fold[dim + blk, dim + blk * padded : dim + (blk + 1) * padded] = 1.0
    stage_a = _compose(stage_a, _affine(fold))
    p1_idx, p2_idx, g_idx = dim, dim + 1, dim + 2
    width_a = dim + 3

    # stage B: fetch the values (and input bit) addressed by p1/p2
    def value_fetch(ref_idx):
        parts = [
            _table_lookup(
                width_a,
                [v_off + m, ref_idx],
                (vcode_range, ref_range),
                lambda v, p, m=m: float(v) if p == m + 1 else 0.0,
            )
            for m in range(padded)
        ]
        return parts

    stage_b_parts = [_identity(width_a)]
    nb_fetch = 2 * padded
    stage_b_parts += value_fetch(p1_idx)
    stage_b_parts += value_fetch(p2_idx)
    if input_bits:
        stage_b_parts += [
            _table_lookup(
                width_a,
                [m, p1_idx],
                ((0, 1), ref_range),
                lambda x, p, m=m: float(x) if p == m + 1 else 0.0,
            )
            for m in range(input_bits)
        ]
        nb_fetch += input_bits
    stage_b = _parallel(stage_b_parts)
    fold_b = np.zeros((width_a + (3 if input_bits else 2), width_a + nb_fetch))
    fold_b[:width_a, :width_a] = np.eye(width_a)
    fold_b[width_a, width_a : width_a + padded] = 1.0
    fold_b[width_a + 1, width_a + padded : width_a + 2 * padded] = 1.0
    if input_bits:
        fold_b[width_a + 2, width_a + 2 * padded :] = 1.0
    stage_b = _compose(stage_b, _affine(fold_b))
    val1_idx, val2_idx = width_a, width_a + 1
    x_idx = width_a + 2 if input_bits else None
    width_b = width_a + (3 if input_bits else 2)

    # stage C: the addressed node's new value code (0 = leave everything)
    def node_out(g, v1, v2, x=0.0):
        if g == 0:
            return 0.0
        kind = GATE_KINDS[int(g) - 1]
        val1 = {0: None, 1: 0, 2: 1, 3: None}[int(v1)]
        un1 = v1 in (0, 3)
        un2 = v2 in (0, 3)
        if kind == "CONST0":
            return 1.0
        if kind == "CONST1":
            return 2.0
        if kind == "INPUT":
            return float(x) + 1.0
        if kind == "NOT":
            return 3.0 if un1 else float((1 - val1) + 1)
        if un1 or un2:
            return 3.0
        val2 = {1: 0, 2: 1}[int(v2)]
        if kind == "AND":
            return float((val1 & val2) + 1)
        return float((val1 | val2) + 1)

    if input_bits:
        obar = _table_lookup(
            width_b,
            [g_idx, val1_idx, val2_idx, x_idx],
            (gate_range, vcode_range, vcode_range, (0, 1)),
            node_out,
        )
    else:
        obar = _table_lookup(
            width_b,
            [g_idx, val1_idx, val2_idx],
            (gate_range, vcode_range, vcode_range),
            node_out,
        )
    stage_c = _parallel([_identity(width_b), obar])
    obar_idx = width_b

    # stage D: v'_i = obar if a == i and obar != 0, else v_i
    parts = [_select(width_b + 1, list(range(input_bits + 3 * padded)))]
    for i in range(padded):
        parts.append(
            _table_lookup(
                width_b + 1,
                [v_off + i, obar_idx, a_idx],
                (vcode_range, vcode_range, actions),
                lambda v, o, a, i=i: float(o)
                if (a == i + 1 and o != 0 and v != PAD_CODE)
                else float(v),
            )
        )
    return _chain(stage_a, stage_b, stage_c, _parallel(parts))


# ---------------------------------------------------------------------------
# Policy networks


def build_policy_mlp(family, n, *, size=None, step_bound=None):
    """Scalar network returning the smallest computable-but-uncomputed
    node index, or the largest action when none qualifies."""
    if family == "cvp":
        return _policy_mlp(0, n, n, n)
    if family == "p":
        size = n if size is None else size
        step_bound = size if step_bound is None else step_bound
        return _policy_mlp(n, size, step_bound, max(size, n))
    raise InvalidInputError(f"no policy network builder for family {family!r}")


def _policy_mlp(input_bits, size, padded, max_ref):
    dim = input_bits + 4 * padded  # state embedding only
    node_off = input_bits
    v_off = input_bits + 3 * padded
    ref_range = tuple(range(max_ref + 1))
    vcode_range = (PAD_CODE, 1, 2, 3)
    gate_range = tuple(range(7))

    # stage A: the two input values of every node
    parts = [_identity(dim)]
    for i in range(padded):
        for ref_slot in (0, 1):
            cell_parts = []
            for m in range(padded):
                cell_parts.append(
                    _table_lookup(
                        dim,
                        [v_off + m, node_off + 3 * i + ref_slot],
                        (vcode_range, ref_range),
                        lambda v, p, m=m: float(v) if p == m + 1 else 0.0,
                    )
                )
            gathered = _parallel(cell_parts)
            parts.append(
                _compose(gathered, _affine(np.ones((1, padded))))
            )
    stage_a = _parallel(parts)
    width_a = dim + 2 * padded
    val_idx = lambda i, slot: dim + 2 * i + slot

    # stage B: membership of each node in the computable-uncomputed set
    def member(g, v1, v2, own):
        if own != 3:
            return 0.0  # pads and computed nodes never qualify
        if g == 0:
            return 0.0
        kind = GATE_KINDS[int(g) - 1]
        if kind in ("CONST0", "CONST1", "INPUT"):
            return 1.0
        if kind == "NOT":
            return 1.0 if v1 in (1, 2) else 0.0
        return 1.0 if (v1 in (1, 2) and v2 in (1, 2)) else 0.0

    members = [
        _table_lookup(
            width_a,
            [node_off + 3 * i + 2, val_idx(i, 0), val_idx(i, 1), v_off + i],
            (gate_range, vcode_range, vcode_range, vcode_range),
            member,
        )
        for i in range(padded)
    ]
    stage_b = _parallel(members)

    # stage C: position weights ReLU(1 - sum of earlier members), summed
    prefix = np.zeros((padded, padded))
    for i in range(padded):
        prefix[i, :i] = -1.0
    stage_c = Mlp(
        (
            (prefix, np.ones(padded)),
            (np.ones((1, padded)), np.zeros(1)),
            (np.eye(1), np.zeros(1)),
        )
    )
    return _chain(stage_a, stage_b, stage_c)


# ---------------------------------------------------------------------------
# Equivalence reports


@dataclass
class EquivReport:
    points: int
    matches: int
    mismatches: list
    empty_domain: bool = False

    @property
    def exact(self):
        return self.points > 0 and self.matches == self.points

    def to_json(self):
        return {
            "points": self.points,
            "matches": self.matches,
            "mismatches": [
                {"input": list(x), "got": list(got), "want": list(want)}
                for x, got, want in self.mismatches
            ],
            "warningEmptyDomain": self.empty_domain,
        }


def mlp_equiv_check(mlp, reference, domain, max_witnesses=10):
    """Compare a network against a reference callable on every domain
    point; collects up to `max_witnesses` mismatching inputs."""
    points = 0
    matches = 0
    mismatches = []
    for x in domain:
        points += 1
        got = mlp_forward(mlp, x)
        want = tuple(float(v) for v in np.atleast_1d(reference(x)))
        if got == want:
            matches += 1
        elif len(mismatches) < max_witnesses:
            mismatches.append((tuple(x), got, want))
    return EquivReport(points, matches, mismatches, empty_domain=points == 0)


def mlp_to_json_str(mlp):
    return json.dumps(mlp.to_json(), sort_keys=True)
