"""3-CNF formulas with exactly n clauses over n variables.

A literal is a signed 1-based variable index: +i stands for the variable
u_i, -i for its negation.  Every clause has exactly three literals and a
formula has exactly as many clauses as variables, so an instance is fully
described by its 3n literals.

JSON schema: {"n": int, "clauses": [[int, int, int], ...]}.
"""

from dataclasses import dataclass
from itertools import product

from mdpzoo.errors import InvalidInputError

Clause = tuple[int, int, int]


@dataclass(frozen=True)
class Cnf3Formula:
    n: int
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("variable count must be positive")
        if len(self.clauses) != self.n:
            raise InvalidInputError(
                f"expected exactly {self.n} clauses, got {len(self.clauses)}"
            )
        for clause in self.clauses:
            if len(clause) != 3:
                raise InvalidInputError(f"clause {clause} does not have width 3")
            for lit in clause:
                if lit == 0 or abs(lit) > self.n:
                    raise InvalidInputError(f"literal {lit} out of range for n={self.n}")

    def to_json(self):
        return {"n": self.n, "clauses": [list(c) for c in self.clauses]}

    @classmethod
    def from_json(cls, data):
        try:
            clauses = tuple(tuple(int(x) for x in c) for c in data["clauses"])
            return cls(int(data["n"]), clauses)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed formula JSON: {exc}") from exc


def literal_value(lit, bits):
    """Value of a single literal under an assignment (tuple of 0/1)."""
    val = bits[abs(lit) - 1]
    return val if lit > 0 else 1 - val


def literal_code(lit, n):
    """Integer code in [2n]: +i maps to i, -i maps to i + n."""
    return lit if lit > 0 else n - lit


def code_to_literal(code, n):
    return code if code <= n else -(code - n)


def evaluate_formula(formula, bits):
    """Return 1 iff every clause has at least one literal true under `bits`."""
    if len(bits) != formula.n:
        raise InvalidInputError(
            f"assignment length {len(bits)} != variable count {formula.n}"
        )
    for clause in formula.clauses:
        if not any(literal_value(lit, bits) for lit in clause):
            return 0
    return 1


def all_assignments(n):
    """All 2^n assignments in binary counting order with bit 1 as the LSB."""
    for m in range(1 << n):
        yield tuple((m >> i) & 1 for i in range(n))


def all_formulas(n):
    """All (2n)^(3n) formulas, enumerating each literal slot over the 2n codes."""
    codes = range(1, 2 * n + 1)
    for flat in product(codes, repeat=3 * n):
        clauses = tuple(
            tuple(code_to_literal(c, n) for c in flat[3 * i : 3 * i + 3])
            for i in range(n)
        )
        yield Cnf3Formula(n, clauses)


def parse_dimacs(text):
    """Parse a DIMACS CNF file into (num_vars, clauses).

    Only clauses of width <= 3 are accepted; width-1/2 clauses are padded
    to width 3 by repeating their first literal.
    """
    num_vars = None
    clauses = []
    current = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise InvalidInputError(f"bad DIMACS header: {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                if current:
                    clauses.append(_pad_clause(tuple(current)))
                    current = []
            else:
                current.append(lit)
    if current:
        clauses.append(_pad_clause(tuple(current)))
    if num_vars is None:
        raise InvalidInputError("missing DIMACS problem line")
    return num_vars, clauses


def _pad_clause(clause):
    if len(clause) > 3:
        raise InvalidInputError(f"clause {clause} wider than 3")
    if not clause:
        raise InvalidInputError("empty clause")
    while len(clause) < 3:
        clause = clause + (clause[0],)
    return clause
