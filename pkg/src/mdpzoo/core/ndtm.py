"""Nondeterministic Turing machines on a fixed-length tape.

A machine has two total transition tables, one per branch bit.  A
configuration is (machine state, tape, head); the tape has exactly
step_bound cells, cell 0 holds the start marker and the head starts there.
Accept and halt states are absorbing: stepping such a configuration
returns it unchanged, which keeps "accepting at exactly step_bound steps"
equivalent to "accepting within step_bound steps".

JSON schema: {"states": [...], "start": str, "accept": str, "halt": str,
"tapeAlphabet": [...], "delta0": {"state|sym": [state, sym, move]},
"delta1": {...}, "stepBound": int} with move one of L|S|R.
"""

from dataclasses import dataclass
from typing import NamedTuple

from mdpzoo.errors import InvalidInputError, ResourceLimitError, SimulationBoundsError

BLANK = "_"
START_MARKER = ">"
SYM0 = "0"
SYM1 = "1"
MOVES = ("L", "S", "R")
MOVE_OFFSET = {"L": -1, "S": 0, "R": 1}

Rule = tuple[str, str, str]  # (next state, written symbol, head move)


class Configuration(NamedTuple):
    state: str
    tape: tuple[str, ...]
    head: int


# eq=False: the rule tables are dicts, so machine descriptions compare and
# hash by identity; they are instance data, never part of a state record.
@dataclass(frozen=True, eq=False)
class NdtmSpec:
    states: tuple[str, ...]
    start: str
    accept: str
    halt: str
    tape_alphabet: tuple[str, ...]
    delta0: dict
    delta1: dict
    step_bound: int

    def __post_init__(self):
        for name in (self.start, self.accept, self.halt):
            if name not in self.states:
                raise InvalidInputError(f"designated state {name!r} not in state set")
        for sym in (BLANK, START_MARKER, SYM0, SYM1):
            if sym not in self.tape_alphabet:
                raise InvalidInputError(f"tape alphabet must contain {sym!r}")
        if self.step_bound < 1:
            raise InvalidInputError("step bound must be positive")
        for branch, delta in ((0, self.delta0), (1, self.delta1)):
            for state in self.states:
                for sym in self.tape_alphabet:
                    rule = delta.get((state, sym))
                    if rule is None:
                        raise InvalidInputError(
                            f"delta{branch} undefined on ({state!r}, {sym!r})"
                        )
                    nstate, wsym, move = rule
                    if nstate not in self.states or wsym not in self.tape_alphabet:
                        raise InvalidInputError(f"delta{branch} rule {rule} malformed")
                    if move not in MOVES:
                        raise InvalidInputError(f"bad head move {move!r}")

    def to_json(self):
        def flat(delta):
            return {
                f"{state}|{sym}": list(rule) for (state, sym), rule in sorted(delta.items())
            }

        return {
            "states": list(self.states),
            "start": self.start,
            "accept": self.accept,
            "halt": self.halt,
            "tapeAlphabet": list(self.tape_alphabet),
            "delta0": flat(self.delta0),
            "delta1": flat(self.delta1),
            "stepBound": self.step_bound,
        }

    @classmethod
    def from_json(cls, data):
        def unflat(flat):
            out = {}
            for key, rule in flat.items():
                state, sym = key.split("|", 1)
                out[(state, sym)] = tuple(rule)
            return out

        try:
            return cls(
                states=tuple(data["states"]),
                start=data["start"],
                accept=data["accept"],
                halt=data["halt"],
                tape_alphabet=tuple(data["tapeAlphabet"]),
                delta0=unflat(data["delta0"]),
                delta1=unflat(data["delta1"]),
                step_bound=int(data["stepBound"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed ndtm JSON: {exc}") from exc


def complete_delta(rules, states, alphabet, halt):
    """Fill a partial rule table: unspecified pairs loop into the halt state."""
    delta = dict(rules)
    for state in states:
        for sym in alphabet:
            delta.setdefault((state, sym), (halt, sym, "S"))
    return delta


def initial_configuration(spec, x):
    """Start marker at cell 0, input bits at cells 1..|x|, blanks after."""
    bits = tuple(str(b) for b in x)
    if any(b not in (SYM0, SYM1) for b in bits):
        raise InvalidInputError(f"input string must be binary, got {x!r}")
    if len(bits) + 1 > spec.step_bound:
        raise InvalidInputError(
            f"input length {len(bits)} does not fit on a tape of {spec.step_bound} cells"
        )
    tape = (START_MARKER,) + bits + (BLANK,) * (spec.step_bound - 1 - len(bits))
    return Configuration(spec.start, tape, 0)


def ndtm_step(spec, config, branch):
    """Apply delta0 or delta1 once; accept/halt configurations are absorbing."""
    if config.state in (spec.accept, spec.halt):
        return config
    delta = spec.delta1 if branch else spec.delta0
    rule = delta.get((config.state, config.tape[config.head]))
    if rule is None:
        raise InvalidInputError(
            f"no rule for ({config.state!r}, {config.tape[config.head]!r})"
        )
    nstate, wsym, move = rule
    head = config.head + MOVE_OFFSET[move]
    if head < 0:
        raise SimulationBoundsError("head moved left of the start marker")
    if head >= len(config.tape):
        raise SimulationBoundsError("head moved past the end of the tape")
    tape = config.tape
    if wsym != tape[config.head]:
        tape = tape[: config.head] + (wsym,) + tape[config.head + 1 :]
    return Configuration(nstate, tape, head)


def ndtm_accepts(spec, x, max_step_bound=16):
    """Brute-force acceptance: try every branch sequence of length step_bound.

    Cost is 2^step_bound in the worst case, so a ceiling guards against
    accidental blowups.
    """
    if spec.step_bound > max_step_bound:
        raise ResourceLimitError(
            f"step bound {spec.step_bound} exceeds brute-force ceiling {max_step_bound}"
        )

    def search(config, steps_left):
        if config.state == spec.accept:
            return 1
        if steps_left == 0 or config.state == spec.halt:
            return 0
        return search(ndtm_step(spec, config, 0), steps_left - 1) or search(
            ndtm_step(spec, config, 1), steps_left - 1
        )

    return search(initial_configuration(spec, x), spec.step_bound)
