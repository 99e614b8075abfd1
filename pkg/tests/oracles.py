"""Reference implementations on cvxpy, used only to cross-check the package.

These formulate the same optimization problems directly with the modelling
layer and an external conic solver, independent of ``bellrand.sdp``.
"""

from __future__ import annotations

import numpy as np

cp = None


def _cvxpy():
    global cp
    if cp is None:
        import cvxpy

        cp = cvxpy
    return cp


def di_guessing(beh, x_star: int, level: int = 2) -> float:
    from bellrand.npa import build_structure, moment_matrix_constraints
    from bellrand.scenario import to_collins_gisin

    cp = _cvxpy()
    s = beh.scenario
    ms = build_structure(s, level)
    mt = moment_matrix_constraints(ms)
    cg = to_collins_gisin(beh).as_dict()
    k = s.alice_outcomes[x_star]
    G = [cp.Variable((ms.matrix_dim, ms.matrix_dim), symmetric=True) for _ in range(k)]
    cons = [g >> 0 for g in G]
    for g in G:
        cons += [g[sl] == g[rep] for sl, rep in mt.ties]
        cons += [g[sl] == 0 for sl in mt.zeros]
    cons.append(sum(g[0, 0] for g in G) == 1)
    cons += [sum(g[sl] for g in G) == cg[key] for key, sl in mt.anchors.items()]
    obj = 0
    for e, g in enumerate(G):
        if e < k - 1:
            obj += g[mt.anchors[("A", x_star, e)]]
        else:
            obj += g[0, 0] - sum(g[mt.anchors[("A", x_star, a)]] for a in range(k - 1))
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver="CLARABEL")
    return float(prob.value)


def steering_guessing(asm, x_star: int) -> float:
    cp = _cvxpy()
    sig = asm.sigma
    k = asm.outcomes[x_star]
    V = {
        (e, x, a): cp.Variable((2, 2), hermitian=True)
        for e in range(k)
        for x in range(len(sig))
        for a in range(sig[x].shape[0])
    }
    cons = [v >> 0 for v in V.values()]
    for x in range(len(sig)):
        for a in range(sig[x].shape[0]):
            cons.append(sum(V[e, x, a] for e in range(k)) == sig[x][a])
    for e in range(k):
        for x in range(1, len(sig)):
            cons.append(sum(V[e, x, a] for a in range(sig[x].shape[0])) == sum(V[e, 0, a] for a in range(sig[0].shape[0])))
    obj = cp.real(sum(cp.trace(V[e, x_star, e]) for e in range(k)))
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver="CLARABEL")
    return float(prob.value)


def chsh_level1() -> float:
    """Max CHSH over 5x5 moment matrices of +-1 observables (correlator form)."""
    cp = _cvxpy()
    G = cp.Variable((5, 5), symmetric=True)
    cons = [G >> 0] + [G[i, i] == 1 for i in range(5)]
    # basis 1, A0, A1, B0, B1
    obj = G[1, 3] + G[1, 4] + G[2, 3] - G[2, 4]
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver="CLARABEL")
    return float(prob.value)
