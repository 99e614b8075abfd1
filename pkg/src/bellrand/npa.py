"""Symbolic NPA moment matrices for bipartite Bell scenarios.

Operators are projectors ``A_{a|x}`` and ``B_{b|y}`` for every non-final
outcome (the final outcome is implicit through completeness). Projectors of
different parties commute, projectors of the same input are orthogonal, and
the moment matrix is taken real symmetric, which identifies every word with
its reverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .scenario import Scenario


class Op(NamedTuple):
    party: int  # 0 = Alice, 1 = Bob
    input: int
    outcome: int

    def __str__(self) -> str:
        return f"{'AB'[self.party]}{self.outcome + 1}|{self.input + 1}"


Word = tuple  # tuple[Op, ...]; () is the identity

ZERO = None


def _reduce_party(ops: Iterable[Op]):
    stack: list[Op] = []
    for op in ops:
        if stack and stack[-1].input == op.input:
            if stack[-1].outcome == op.outcome:
                continue
            return ZERO
        stack.append(op)
    return stack


def canonicalize(word: Sequence[Op]):
    """Normal form of a product of projectors, or ``ZERO``.

    Alice's operators are moved in front of Bob's, repeated adjacent
    projectors collapse and orthogonal neighbours annihilate the word.
    """
    word = [Op(*w) for w in word]
    alice = _reduce_party(w for w in word if w.party == 0)
    if alice is ZERO:
        return ZERO
    bob = _reduce_party(w for w in word if w.party == 1)
    if bob is ZERO:
        return ZERO
    return tuple(alice) + tuple(bob)


def adjoint(word: Word) -> Word:
    alice = [w for w in word if w.party == 0]
    bob = [w for w in word if w.party == 1]
    return tuple(reversed(alice)) + tuple(reversed(bob))


def moment_key(word: Word):
    """Key shared by ``word`` and its adjoint (real moment matrix)."""
    if word is ZERO:
        return ZERO
    return min(word, adjoint(word))


def word_str(word) -> str:
    if word is ZERO:
        return "0"
    return " ".join(str(w) for w in word) or "1"


def operators(s: Scenario) -> list[Op]:
    ops = [Op(0, x, a) for x, k in enumerate(s.alice_outcomes) for a in range(k - 1)]
    ops += [Op(1, y, b) for y, k in enumerate(s.bob_outcomes) for b in range(k - 1)]
    return ops


def monomial_basis(s: Scenario, level: int) -> list[Word]:
    """Canonical words of length <= level, ordered by length then (party, input, outcome)."""
    ops = operators(s)
    basis: list[Word] = [()]
    seen = {()}
    for length in range(1, level + 1):
        for combo in product(ops, repeat=length):
            w = canonicalize(combo)
            if w is ZERO or len(w) != length or w in seen:
                continue
            seen.add(w)
            basis.append(w)
    return basis


@dataclass(frozen=True, eq=False)
class MomentStructure:
    """Layout of a level-``level`` moment matrix.

    ``template[i, j]`` holds the variable id of entry (i, j), or -1 where the
    operator product vanishes. Variable 0 is the normalization moment.
    """

    scenario: Scenario
    level: int
    basis: tuple
    template: np.ndarray
    variables: tuple  # id -> canonical word
    prob_index: dict  # CG key -> variable id

    @property
    def matrix_dim(self) -> int:
        return len(self.basis)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def var_index(self) -> dict:
        return {w: i for i, w in enumerate(self.variables)}

    def slots(self) -> dict[int, list[tuple[int, int]]]:
        """Upper-triangle positions of every variable id (-1 for zero slots)."""
        out: dict[int, list[tuple[int, int]]] = {}
        n = self.matrix_dim
        for i in range(n):
            for j in range(i, n):
                out.setdefault(int(self.template[i, j]), []).append((i, j))
        return out

    def representative(self, var: int) -> tuple[int, int]:
        return self._reps[var]

    def __post_init__(self) -> None:
        reps: dict[int, tuple[int, int]] = {}
        n = len(self.basis)
        for i in range(n):
            for j in range(i, n):
                v = int(self.template[i, j])
                if v >= 0 and v not in reps:
                    reps[v] = (i, j)
        object.__setattr__(self, "_reps", reps)

    def dump(self) -> str:
        """Text rendering of the symbolic matrix, for debugging."""
        lines = ["basis: " + ", ".join(word_str(w) for w in self.basis)]
        for row in self.template:
            lines.append(" ".join(f"{int(v):4d}" for v in row))
        for key, var in self.prob_index.items():
            lines.append(f"{key} -> y{var} = <{word_str(self.variables[var])}>")
        return "\n".join(lines)


def build_structure(s: Scenario, level: int = 2) -> MomentStructure:
    if level not in (1, 2):
        raise ValueError(f"unsupported NPA level {level}; use 1 or 2")
    basis = monomial_basis(s, level)
    n = len(basis)
    ids: dict = {(): 0}
    variables: list = [()]
    template = np.full((n, n), -1, dtype=int)
    for i, u in enumerate(basis):
        for j in range(i, n):
            key = moment_key(canonicalize(adjoint(u) + basis[j]))
            if key is ZERO:
                continue
            if key not in ids:
                ids[key] = len(variables)
                variables.append(key)
            template[i, j] = template[j, i] = ids[key]

    prob_index = {}
    for key in s.cg_keys():
        if key[0] == "A":
            word = (Op(0, key[1], key[2]),)
        elif key[0] == "B":
            word = (Op(1, key[1], key[2]),)
        else:
            _, x, y, a, b = key
            word = (Op(0, x, a), Op(1, y, b))
        prob_index[key] = ids[moment_key(word)]
    return MomentStructure(s, level, tuple(basis), template, tuple(variables), prob_index)


@dataclass(frozen=True)
class MomentTemplate:
    """Linear description of the moment matrix for an SDP assembler.

    ``ties`` lists pairs (slot, representative slot) that must be equal,
    ``zeros`` lists slots forced to vanish, ``anchors`` maps each CG key to
    the slot carrying that probability.
    """

    dim: int
    normalization: tuple[int, int]
    ties: tuple
    zeros: tuple
    anchors: dict
    representatives: dict


def moment_matrix_constraints(ms: MomentStructure) -> MomentTemplate:
    ties, zeros = [], []
    for var, slots in sorted(ms.slots().items()):
        if var < 0:
            zeros.extend(slots)
            continue
        rep = ms.representative(var)
        ties.extend((slot, rep) for slot in slots if slot != rep)
    anchors = {key: ms.representative(var) for key, var in ms.prob_index.items()}
    reps = {var: ms.representative(var) for var in range(ms.n_variables)}
    return MomentTemplate(ms.matrix_dim, ms.representative(0), tuple(ties), tuple(zeros), anchors, reps)


def moment_expression(ms: MomentStructure, x: int, y: int, a: int, b: int) -> dict[int, float]:
    """Full-table probability P(ab|xy) as a linear combination of moment variables.

    Final outcomes are expanded through completeness, e.g.
    ``P(last, b|xy) = <B_b|y> - sum_a' <A_a'|x B_b|y>``.
    """
    s = ms.scenario
    ka, kb = s.alice_outcomes[x], s.bob_outcomes[y]
    a_terms = [((Op(0, x, a),), 1.0)] if a < ka - 1 else [((), 1.0)] + [((Op(0, x, i),), -1.0) for i in range(ka - 1)]
    b_terms = [((Op(1, y, b),), 1.0)] if b < kb - 1 else [((), 1.0)] + [((Op(1, y, j),), -1.0) for j in range(kb - 1)]
    ids = ms.var_index
    expr: dict[int, float] = {}
    for wa, ca in a_terms:
        for wb, cb in b_terms:
            var = ids[moment_key(wa + wb)]
            expr[var] = expr.get(var, 0.0) + ca * cb
    return expr


def _tied_builder(ms: MomentStructure, sense: str):
    from .sdp import SdpBuilder

    mt = moment_matrix_constraints(ms)
    builder = SdpBuilder([mt.dim], sense)
    for slot, rep in mt.ties:
        builder.add_constraint([(0, *slot, 1.0), (0, *rep, -1.0)], 0.0)
    for slot in mt.zeros:
        builder.add_constraint([(0, *slot, 1.0)], 0.0)
    builder.add_constraint([(0, *mt.normalization, 1.0)], 1.0)
    return builder, mt


def max_bell_value(s: Scenario, coefficients: np.ndarray, level: int = 2, gap_tol: float = 1e-9) -> float:
    """Upper bound on ``sum c[x, y, a, b] P(ab|xy)`` over the level-``level`` relaxation."""
    from .sdp import SolverError, solve

    c = np.asarray(coefficients, dtype=float)
    if c.shape != s.shape:
        raise ValueError(f"coefficients must have shape {s.shape}")
    ms = build_structure(s, level)
    builder, mt = _tied_builder(ms, "max")
    total: dict[int, float] = {}
    for x, y, a, b in s.cells():
        if c[x, y, a, b]:
            for v, w in moment_expression(ms, x, y, a, b).items():
                total[v] = total.get(v, 0.0) + w * c[x, y, a, b]
    for v, w in total.items():
        builder.objective_entry(0, *mt.representatives[v], w)
    sol = solve(builder.build(), gap_tol=gap_tol)
    if not sol.optimal:
        raise SolverError(sol)
    return float(sol.dual_obj)


def chsh_coefficients() -> np.ndarray:
    """sum_xy (-1)^(xy) <A_x B_y> with outcomes 0 -> +1, 1 -> -1."""
    c = np.zeros((2, 2, 2, 2))
    for x, y, a, b in product(range(2), repeat=4):
        c[x, y, a, b] = (-1) ** (x * y) * (-1) ** (a + b)
    return c


def chained_coefficients(n: int) -> np.ndarray:
    """Chained Bell expression, signed so the singlet with chained settings gives ``2n cos(pi/2n)``.

    ``-(sum_k <A_k B_k> + <A_{k+1} B_k>)`` with the wrap-around term negated.
    """
    c = np.zeros((n, n, 2, 2))
    for a, b in product(range(2), repeat=2):
        corr = -((-1) ** (a + b))
        for k in range(n):
            c[k, k, a, b] += corr
            if k + 1 < n:
                c[k + 1, k, a, b] += corr
            else:
                c[0, k, a, b] -= corr
    return c
