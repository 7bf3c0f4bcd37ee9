"""Fan-in-2 gate DAGs over the basis {CONST, NOT, AND, OR, XOR}.

Gates are stored as tuples in topological order:

    ("in", name)     -- named input; names are arbitrary hashable values
    ("const", bit)
    ("not", a)
    ("and", a, b)
    ("or", a, b)
    ("xor", a, b)

where a, b are indices of earlier gates.  The Builder hash-conses and
constant-folds; by default it lowers XOR to AND/OR/NOT at construction so
that downstream CNF encodings stay within 3 clauses per gate.
"""

from __future__ import annotations


class Builder:
    """Hash-consing circuit builder with light constant folding."""

    def __init__(self, lower_xor: bool = True):
        self.gates: list[tuple] = []
        self._cache: dict[tuple, int] = {}
        self._lower_xor = lower_xor

    def _mk(self, key: tuple) -> int:
        g = self._cache.get(key)
        if g is None:
            g = len(self.gates)
            self.gates.append(key)
            self._cache[key] = g
        return g

    def inp(self, name) -> int:
        return self._mk(("in", name))

    def const(self, bit) -> int:
        return self._mk(("const", 1 if bit else 0))

    def is_const(self, g: int):
        gate = self.gates[g]
        return gate[1] if gate[0] == "const" else None

    def not_(self, a: int) -> int:
        gate = self.gates[a]
        if gate[0] == "const":
            return self.const(1 - gate[1])
        if gate[0] == "not":
            return gate[1]
        return self._mk(("not", a))

    def _binop(self, op: str, a: int, b: int) -> int:
        if a > b:
            a, b = b, a
        ca, cb = self.is_const(a), self.is_const(b)
        if op == "and":
            if ca == 0 or cb == 0:
                return self.const(0)
            if ca == 1:
                return b
            if cb == 1:
                return a
            if a == b:
                return a
            if self.gates[b] == ("not", a) or self.gates[a] == ("not", b):
                return self.const(0)
        elif op == "or":
            if ca == 1 or cb == 1:
                return self.const(1)
            if ca == 0:
                return b
            if cb == 0:
                return a
            if a == b:
                return a
            if self.gates[b] == ("not", a) or self.gates[a] == ("not", b):
                return self.const(1)
        elif op == "xor":
            if a == b:
                return self.const(0)
            if ca is not None and cb is not None:
                return self.const(ca ^ cb)
            if ca == 0:
                return b
            if cb == 0:
                return a
            if ca == 1:
                return self.not_(b)
            if cb == 1:
                return self.not_(a)
            if self.gates[b] == ("not", a) or self.gates[a] == ("not", b):
                return self.const(1)
        return self._mk((op, a, b))

    def and_(self, a: int, b: int) -> int:
        return self._binop("and", a, b)

    def or_(self, a: int, b: int) -> int:
        return self._binop("or", a, b)

    def xor_(self, a: int, b: int) -> int:
        if self._lower_xor:
            # a^b == (a|b) & ~(a&b); NOT is free in the clausal encoding
            return self.and_(self.or_(a, b), self.not_(self.and_(a, b)))
        return self._binop("xor", a, b)

    def xnor_(self, a: int, b: int) -> int:
        return self.not_(self.xor_(a, b))

    def mux_(self, sel: int, if1: int, if0: int) -> int:
        """sel ? if1 : if0."""
        return self.or_(self.and_(sel, if1), self.and_(self.not_(sel), if0))

    def and_many(self, gs) -> int:
        acc = self.const(1)
        for g in gs:
            acc = self.and_(acc, g)
        return acc

    def or_many(self, gs) -> int:
        acc = self.const(0)
        for g in gs:
            acc = self.or_(acc, g)
        return acc

    def import_circuit(self, circuit: "Circuit", resolve) -> list[int]:
        """Copy a circuit into this builder.

        ``resolve(name)`` maps each input name of ``circuit`` to a gate id
        in this builder (allowing substitution of inputs by arbitrary
        subcircuits).  Returns the new ids of the circuit's outputs.
        """
        remap: list[int] = [0] * len(circuit.gates)
        for idx, gate in enumerate(circuit.gates):
            op = gate[0]
            if op == "in":
                remap[idx] = resolve(gate[1])
            elif op == "const":
                remap[idx] = self.const(gate[1])
            elif op == "not":
                remap[idx] = self.not_(remap[gate[1]])
            else:
                remap[idx] = self._binop(op, remap[gate[1]], remap[gate[2]])
        return [remap[o] for o in circuit.outputs]

    def extract(self, outputs) -> "Circuit":
        """Garbage-collect to the cone of ``outputs`` and freeze."""
        outputs = list(outputs)
        keep: list[int] = []
        seen = set()
        stack = list(outputs)
        while stack:
            g = stack.pop()
            if g in seen:
                continue
            seen.add(g)
            keep.append(g)
            gate = self.gates[g]
            if gate[0] in ("not",):
                stack.append(gate[1])
            elif gate[0] in ("and", "or", "xor"):
                stack.append(gate[1])
                stack.append(gate[2])
        keep.sort()
        remap = {old: new for new, old in enumerate(keep)}
        gates = []
        for old in keep:
            gate = self.gates[old]
            if gate[0] in ("in", "const"):
                gates.append(gate)
            elif gate[0] == "not":
                gates.append(("not", remap[gate[1]]))
            else:
                gates.append((gate[0], remap[gate[1]], remap[gate[2]]))
        return Circuit(tuple(gates), tuple(remap[o] for o in outputs))


class Circuit:
    """An immutable fan-in-2 gate DAG with an ordered list of outputs."""

    def __init__(self, gates: tuple, outputs: tuple):
        self.gates = tuple(gates)
        self.outputs = tuple(outputs)

    @property
    def size(self) -> int:
        """Number of non-input gates."""
        return sum(1 for g in self.gates if g[0] != "in")

    def input_names(self) -> list:
        seen = []
        for g in self.gates:
            if g[0] == "in":
                seen.append(g[1])
        return seen

    def eval(self, assign: dict) -> tuple:
        """Evaluate under a total assignment of input names to bits."""
        return self.eval_masks(assign, mask=1)

    def eval_masks(self, assign: dict, mask: int = None, width: int = None) -> tuple:
        """Bit-parallel evaluation: input values are bitmasks of ``width``.

        With width w, position p of each value corresponds to one of up to
        2**w simultaneous assignments.  ``mask=1`` degenerates to plain
        single-assignment evaluation.
        """
        if mask is None:
            mask = (1 << width) - 1
        vals = [0] * len(self.gates)
        for idx, gate in enumerate(self.gates):
            op = gate[0]
            if op == "in":
                try:
                    vals[idx] = assign[gate[1]] & mask
                except KeyError:
                    raise MissingInputError(gate[1])
            elif op == "const":
                vals[idx] = mask if gate[1] else 0
            elif op == "not":
                vals[idx] = vals[gate[1]] ^ mask
            elif op == "and":
                vals[idx] = vals[gate[1]] & vals[gate[2]]
            elif op == "or":
                vals[idx] = vals[gate[1]] | vals[gate[2]]
            else:
                vals[idx] = vals[gate[1]] ^ vals[gate[2]]
        return tuple(vals[o] for o in self.outputs)


class MissingInputError(KeyError):
    pass


class CyclicDependencyError(ValueError):
    pass


def input_masks(names, width: int = None) -> dict:
    """Standard bit-parallel input patterns for exhaustive evaluation.

    ``names[0]`` is the most significant position: assignment index
    ``v`` (0 <= v < 2**len(names)) has ``names[i]`` set iff the bit of
    weight 2**(len(names)-1-i) of v is set.
    """
    n = len(names)
    total = 1 << n
    assign = {}
    for i, name in enumerate(names):
        weight = n - 1 - i
        block = 1 << weight
        pat = 0
        v = 0
        while v < total:
            pat |= ((1 << block) - 1) << (v + block)
            v += 2 * block
        assign[name] = pat
    return assign


class SkolemVector:
    """An ordered tuple of per-output circuits with acyclic Y-dependencies.

    Internally one shared gate arena with m outputs; input names are
    ("x", i) for 1 <= i <= n and ("y", j) for earlier outputs.  Output i
    may reference ("y", j) only for j < i.
    """

    def __init__(self, n: int, arena: Circuit):
        self.n = n
        self.arena = arena
        self.m = len(arena.outputs)
        self._check_acyclic()

    def _check_acyclic(self):
        # max y index in the cone of each gate
        maxy = [0] * len(self.arena.gates)
        for idx, gate in enumerate(self.arena.gates):
            if gate[0] == "in":
                name = gate[1]
                if isinstance(name, tuple) and name[0] == "y":
                    maxy[idx] = name[1]
                elif not (isinstance(name, tuple) and name[0] == "x"):
                    raise ValueError(f"unexpected input name {name!r} in Skolem vector")
                elif name[1] < 1 or name[1] > self.n:
                    raise ValueError(f"input {name!r} out of range")
            elif gate[0] in ("not",):
                maxy[idx] = maxy[gate[1]]
            elif gate[0] != "const":
                maxy[idx] = max(maxy[gate[1]], maxy[gate[2]])
        for i, out in enumerate(self.arena.outputs, start=1):
            if maxy[out] >= i:
                raise CyclicDependencyError(
                    f"psi_{i} depends on Y_{maxy[out]} (needs j < {i})"
                )

    def psi(self, i: int) -> Circuit:
        """The circuit for output i (1-based), as its own cone."""
        b = Builder()
        got = b.import_circuit(self.arena, lambda name: b.inp(name))
        return b.extract([got[i - 1]])

    @property
    def psis(self) -> list:
        return [self.psi(i) for i in range(1, self.m + 1)]

    @property
    def size(self) -> int:
        return self.arena.size

    def eval(self, xbits) -> list:
        assign = {("x", i + 1): xbits[i] for i in range(self.n)}
        out = []
        # outputs are evaluated in order; later psis may read earlier ys
        for i, o in enumerate(self.arena.outputs, start=1):
            sub = Builder()
            got = sub.import_circuit(
                Circuit(self.arena.gates, (o,)), lambda name: sub.inp(name)
            )
            val = sub.extract(got).eval(assign)[0]
            assign[("y", i)] = val
            out.append(val)
        return out

    def eval_masks(self, width: int) -> list:
        """Outputs on all 2**width X-assignments at once (n == width)."""
        assign = input_masks([("x", i) for i in range(1, self.n + 1)])
        mask = (1 << (1 << self.n)) - 1
        outs = []
        # sequential: psi_i may read ("y", j) for j < i
        for i in range(1, self.m + 1):
            v = self.psi(i).eval_masks(assign, mask=mask)[0]
            assign[("y", i)] = v
            outs.append(v)
        return outs


def vector_from_circuits(n: int, psis) -> SkolemVector:
    """Assemble a SkolemVector from single-output circuits over x/y names."""
    b = Builder()
    outs = []
    for c in psis:
        outs.extend(b.import_circuit(c, lambda name: b.inp(name)))
    return SkolemVector(n, b.extract(outs))


def constant_vector(n: int, bits) -> SkolemVector:
    b = Builder()
    outs = [b.const(v) for v in bits]
    return SkolemVector(n, b.extract(outs))
