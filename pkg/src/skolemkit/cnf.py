"""CNF containers, the Tseitin transformation, and XOR parity encoding.

Clauses are lists of nonzero DIMACS-style integer literals.  The Tseitin
encoding maps every gate to a *literal* rather than a variable, so NOT
gates cost no clauses and AND/OR gates cost at most 3 clauses each.
"""

from __future__ import annotations

from .circuits import Circuit


class Cnf:
    def __init__(self, nvars: int = 0, clauses=None):
        self.nvars = nvars
        self.clauses: list[list[int]] = [list(c) for c in (clauses or [])]

    def add(self, clause):
        clause = list(clause)
        for lit in clause:
            if abs(lit) > self.nvars:
                self.nvars = abs(lit)
        self.clauses.append(clause)

    def fresh(self) -> int:
        self.nvars += 1
        return self.nvars

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def copy(self) -> "Cnf":
        return Cnf(self.nvars, self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.nvars} {len(self.clauses)}"]
        for c in self.clauses:
            lines.append(" ".join(map(str, c)) + " 0")
        return "\n".join(lines) + "\n"

    def __len__(self):
        return len(self.clauses)


class TseitinResult:
    def __init__(self, cnf: Cnf, gate_lits: list, output_lits: list, aux_vars: set):
        self.cnf = cnf
        self.gate_lits = gate_lits          # gate index -> literal
        self.output_lits = output_lits      # circuit outputs -> literals
        self.aux_vars = aux_vars            # freshly introduced variables


def tseitin(circuit: Circuit, input_var, cnf: Cnf = None,
            assert_outputs=True) -> TseitinResult:
    """Encode ``circuit`` into ``cnf``.

    ``input_var(name)`` maps every input name to an existing CNF variable.
    When ``assert_outputs`` is True (or a list of polarities), a unit
    clause fixes each output accordingly.  Adds at most 3 clauses per
    AND/OR gate (4 per raw XOR), NOT and CONST gates are free.
    """
    if cnf is None:
        cnf = Cnf()
    aux = set()
    units = set()
    true_lit = [None]  # lazily allocated var fixed to 1, for bare constants

    def get_true():
        if true_lit[0] is None:
            v = cnf.fresh()
            aux.add(v)
            cnf.add([v])
            units.add(v)
            true_lit[0] = v
        return true_lit[0]

    lits: list[int] = [0] * len(circuit.gates)
    for idx, gate in enumerate(circuit.gates):
        op = gate[0]
        if op == "in":
            lits[idx] = input_var(gate[1])
        elif op == "const":
            lits[idx] = get_true() if gate[1] else -get_true()
        elif op == "not":
            lits[idx] = -lits[gate[1]]
        else:
            a, b = lits[gate[1]], lits[gate[2]]
            g = cnf.fresh()
            aux.add(g)
            if op == "and":
                cnf.add([-g, a])
                cnf.add([-g, b])
                cnf.add([g, -a, -b])
            elif op == "or":
                cnf.add([g, -a])
                cnf.add([g, -b])
                cnf.add([-g, a, b])
            else:  # raw xor
                cnf.add([-g, a, b])
                cnf.add([-g, -a, -b])
                cnf.add([g, -a, b])
                cnf.add([g, a, -b])
            lits[idx] = g

    out_lits = [lits[o] for o in circuit.outputs]
    if assert_outputs:
        pols = assert_outputs if isinstance(assert_outputs, (list, tuple)) \
            else [1] * len(out_lits)
        for lit, pol in zip(out_lits, pols):
            unit = lit if pol else -lit
            if unit not in units:
                cnf.add([unit])
                units.add(unit)
    return TseitinResult(cnf, lits, out_lits, aux)


def add_xor_constraint(cnf: Cnf, variables, parity: int) -> list[int]:
    """Add clauses forcing ``xor(variables) == parity``.

    Uses a chain of fresh equivalence variables; at most 4*len(variables)
    clauses.  Returns the fresh variables introduced.
    """
    variables = list(variables)
    if not variables:
        if parity:
            cnf.add([])  # unsatisfiable
        return []
    if len(variables) == 1:
        v = variables[0]
        cnf.add([v] if parity else [-v])
        return []
    fresh = []
    acc = variables[0]
    for v in variables[1:]:
        t = cnf.fresh()
        fresh.append(t)
        # t <-> acc xor v
        cnf.add([-t, acc, v])
        cnf.add([-t, -acc, -v])
        cnf.add([t, -acc, v])
        cnf.add([t, acc, -v])
        acc = t
    cnf.add([acc] if parity else [-acc])
    return fresh
