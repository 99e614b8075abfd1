"""One-sided device-independent guessing probability from an assemblage.

Bob's qubit is trusted, so Eve's strategy is a decomposition of every
``sigma_{a|x}`` into subnormalized assemblages ``sigma^e_{a|x}``, one per
guess ``e``, each of them no-signaling on its own. Complex blocks are
handled through the real embedding ``Y -> [[Re Y, -Im Y], [Im Y, Re Y]]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sdp
from .quantum import Assemblage, DensityMatrix
from .randomness import RandomnessResult
from .scenario import Behavior, FrequencyTable, regularize

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SteeringCertificate:
    """``p_guess <= sum_{a,x} Tr[F[x][a] sigma_{a|x}] + offset`` for every valid assemblage."""

    target_input: int
    operators: tuple[np.ndarray, ...]  # per input, shape (outcomes, 2, 2)
    offset: float = 0.0

    def __call__(self, asm: Assemblage) -> float:
        if asm.outcomes != tuple(f.shape[0] for f in self.operators):
            raise ValueError("certificate and assemblage have different shapes")
        return float(sum(np.einsum("aij,aji->", f, s).real for f, s in zip(self.operators, asm.sigma)) + self.offset)

    def to_dict(self) -> dict:
        return {
            "target_input": self.target_input + 1,
            "offset": self.offset,
            "operators": [[[[float(z.real), float(z.imag)] for z in m.ravel()] for m in f] for f in self.operators],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SteeringCertificate":
        ops = tuple(
            np.array([np.array([complex(re, im) for re, im in m]).reshape(2, 2) for m in f]) for f in d["operators"]
        )
        return cls(int(d["target_input"]) - 1, ops, float(d["offset"]))


@dataclass(frozen=True, eq=False)
class SteeringProblem:
    assemblage: Assemblage
    target_input: int

    def __post_init__(self) -> None:
        if not 0 <= self.target_input < len(self.assemblage.sigma):
            raise ValueError("target input out of range")

    @property
    def eve_outcomes(self) -> int:
        return self.assemblage.outcomes[self.target_input]

    @classmethod
    def from_assemblage(
        cls, asm: Assemblage, target_input: int, ns_tol: float = 1e-9, repair_tol: float = 1e-3
    ) -> "SteeringProblem":
        """Accept ``asm`` if no-signaling to ``ns_tol``, repair it up to ``repair_tol``, refuse beyond."""
        res = asm.signaling_residual()
        if res > repair_tol:
            raise ValueError(f"assemblage signaling residual {res:.2e} exceeds {repair_tol:.0e}; refusing to certify")
        if res > ns_tol:
            log.info("repairing assemblage with signaling residual %.2e", res)
            asm = repair_signaling(asm)
        return cls(asm, target_input)


def repair_signaling(asm: Assemblage) -> Assemblage:
    """Equalize Bob's reduced states without touching the marginals ``Tr sigma_{a|x}``.

    The gap between the input-averaged reduced state and each ``sum_a
    sigma_{a|x}`` is traceless; it is shared among outcomes in proportion to
    ``p(a|x)``.
    """
    red = asm.reduced_states()
    target = red.mean(axis=0)
    sig = []
    for s, r, p in zip(asm.sigma, red, asm.marginals()):
        w = p / p.sum()
        sig.append(s + w[:, None, None] * (target - r)[None])
    try:
        return Assemblage(tuple(sig))
    except ValueError as exc:
        raise ValueError(f"signaling repair left the assemblage invalid: {exc}") from None


# Hermitian H_c with Re Tr[H_c sigma] = (Re s00, Re s11, Re s01, Im s01)
_HERM_BASIS = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 0], [0, 1]], dtype=complex),
    np.array([[0, 0.5], [0.5, 0]], dtype=complex),
    np.array([[0, 0.5j], [-0.5j, 0]], dtype=complex),
)
RANK_TOL = 1e-10


def _herm_values(m: np.ndarray) -> list[float]:
    return [m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag]


def _herm_from_duals(y: Sequence[float]) -> np.ndarray:
    """F with ``Tr[F sigma] = y . (re00, re11, re01, im01)(sigma)``."""
    return sum(c * h for c, h in zip(y, _HERM_BASIS))


def _embedded_terms(k: int, V: np.ndarray, H: np.ndarray, coef: float = 1.0) -> list[tuple[int, int, int, float]]:
    """Builder terms for ``coef * Re Tr[H V Y V^dag]`` on the real embedding of ``Y``."""
    K = V.conj().T @ H @ V
    r = K.shape[0]
    Kh = np.block([[K.real, -K.imag], [K.imag, K.real]])
    return [
        (k, i, j, 0.5 * coef * Kh[i, j])
        for i in range(2 * r)
        for j in range(i, 2 * r)
        if abs(Kh[i, j]) > 1e-15
    ]


def _range_basis(m: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(m)
    return u[:, w > RANK_TOL]


def _steering_sdp(asm: Assemblage, x_star: int):
    """Eve's decomposition with every ``sigma^e_{a|x}`` restricted to the range of ``sigma_{a|x}``.

    The restriction loses nothing (``sigma^e <= sigma``) and restores strict
    feasibility when some ``sigma_{a|x}`` is rank deficient. Constraint rows
    are still the Hermitian components of 2x2 matrices, so the duals give
    full-space operators.
    """
    k = asm.outcomes[x_star]
    ranges = {(x, a): _range_basis(m) for x, s in enumerate(asm.sigma) for a, m in enumerate(s)}
    layout = [
        (e, x, a) for e in range(k) for x, n in enumerate(asm.outcomes) for a in range(n) if ranges[(x, a)].shape[1]
    ]
    index = {key: i for i, key in enumerate(layout)}
    builder = sdp.SdpBuilder([2 * ranges[(x, a)].shape[1] for _, x, a in layout], "max")
    for e in range(k):
        if (e, x_star, e) in index:
            for kk, i, j, c in _embedded_terms(index[(e, x_star, e)], ranges[(x_star, e)], np.eye(2)):
                builder.objective_entry(kk, i, j, c, symmetric_entries=True)

    def terms(e, x, a, H, coef=1.0):
        if (e, x, a) not in index:
            return []
        return _embedded_terms(index[(e, x, a)], ranges[(x, a)], H, coef)

    rows, ns_rows = {}, {}
    for x, s in enumerate(asm.sigma):
        for a, m in enumerate(s):
            rows[(x, a)] = [
                builder.add_constraint([t for e in range(k) for t in terms(e, x, a, H)], v, symmetric_entries=True)
                for H, v in zip(_HERM_BASIS, _herm_values(m))
            ]
    for e in range(k):
        for x in range(1, len(asm.sigma)):
            ns_rows[(e, x)] = [
                builder.add_constraint(
                    [t for a in range(asm.outcomes[x]) for t in terms(e, x, a, H)]
                    + [t for a in range(asm.outcomes[0]) for t in terms(e, 0, a, H, -1.0)],
                    0.0,
                    symmetric_entries=True,
                )
                for H in _HERM_BASIS
            ]
    return builder.build(), rows, ns_rows, ranges


def _full_slacks(asm: Assemblage, x_star: int, F: dict, G: dict) -> dict:
    """Dual slack ``F_{a|x} + N^e_x - [x = x*, a = e] I`` of every full 2x2 block."""
    k = asm.outcomes[x_star]
    out = {}
    for e in range(k):
        for x, n in enumerate(asm.outcomes):
            nx = G[(e, x)] if x else -sum(G[(e, z)] for z in range(1, len(asm.outcomes)))
            for a in range(n):
                out[(e, x, a)] = F[(x, a)] + nx - (np.eye(2) if (x, a) == (x_star, e) else 0)
    return out


def _lift(asm: Assemblage, x_star: int, F: dict, G: dict, ranges: dict) -> dict:
    """Add ``lam P_perp`` to operators of rank-deficient blocks to make their full slack PSD.

    ``Tr[P_perp sigma_{a|x}] = 0``, so the bound on ``asm`` is unchanged;
    the smallest ``lam`` reaching the large-``lam`` eigenvalue limit is kept.
    """
    k = asm.outcomes[x_star]
    out = dict(F)
    for (x, a), V in ranges.items():
        if V.shape[1] == 2:
            continue
        P = np.eye(2) - V @ V.conj().T

        def worst(lam):
            return min(np.linalg.eigvalsh(_full_slacks(asm, x_star, {**out, (x, a): F[(x, a)] + lam * P}, G)[(e, x, a)]).min()
                       for e in range(k))

        grid = np.logspace(-3, 9, 49)
        vals = np.array([worst(lam) for lam in grid])
        best = vals.max()
        lam = grid[np.argmax(vals >= best - 1e-12 * (1 + abs(best)))]
        out[(x, a)] = F[(x, a)] + lam * P
    return out


def steering_guessing_probability(
    p: SteeringProblem, gap_tol: float = 1e-9, accept_gap: float = 1e-3, raise_on_failure: bool = True
) -> RandomnessResult:
    """Certified bound on Eve's guess of Alice's outcome for ``p.target_input``.

    The dual multipliers of the assemblage constraints give the operators
    ``F_{a|x}``. Any dual infeasibility left by the solver is removed by
    adding ``eps * I`` to every operator, which raises the bound by ``eps``
    per input.
    """
    asm = p.assemblage
    if asm.signaling_residual() > 1e-9:
        raise ValueError("assemblage is signaling; build the problem with SteeringProblem.from_assemblage")
    problem, rows, ns_rows, ranges = _steering_sdp(asm, p.target_input)
    sol = sdp.solve(problem, gap_tol=gap_tol)
    diag = sol.diagnostics()
    if sol.status == "infeasible":
        if raise_on_failure:
            raise sdp.SolverError(sol)
        return RandomnessResult(float("nan"), None, solver=diag)

    F = {key: _herm_from_duals(sol.y[r]) for key, r in rows.items()}
    G = {key: _herm_from_duals(sol.y[r]) for key, r in ns_rows.items()}
    F = _lift(asm, p.target_input, F, G, ranges)
    worst = min(np.linalg.eigvalsh(z).min() for z in _full_slacks(asm, p.target_input, F, G).values())
    eps = max(0.0, -worst)
    ops = tuple(
        np.array([F[(x, a)] + eps * np.eye(2) for a in range(n)]) for x, n in enumerate(asm.outcomes)
    )
    cert = SteeringCertificate(p.target_input, ops, 0.0)
    bound = cert(asm)
    tight = bool(np.isfinite(bound) and bound - sol.primal_obj <= accept_gap)
    diag.update(certified_bound=bound, dual_shift=eps, tight=tight)
    if not np.isfinite(bound):
        if raise_on_failure:
            raise sdp.SolverError(sol)
        return RandomnessResult(float("nan"), None, solver=diag)
    if not tight:
        log.warning("certified steering bound %.6f exceeds the primal value %.6f by more than %.1e",
                    bound, sol.primal_obj, accept_gap)
    return RandomnessResult(float(np.clip(bound, 0.0, 1.0)), cert, solver=diag)


def regularized_assemblage(f: FrequencyTable | Behavior, conditional_states: Sequence[Sequence[np.ndarray]]) -> Assemblage:
    """``sigma_{a|x} = p_NS(a|x) rho_{a|x}`` with ``p_NS`` from the regularized behavior.

    ``conditional_states[x][a]`` is Bob's normalized state given Alice's
    outcome. The no-signaling residual of the result is logged; the
    refusal threshold is applied when a problem is built from it.
    """
    beh = regularize(f)
    s = beh.scenario
    if len(conditional_states) != s.n_inputs[0]:
        raise ValueError("need conditional states for every Alice input")
    sig = []
    for x, states in enumerate(conditional_states):
        if len(states) != s.alice_outcomes[x]:
            raise ValueError(f"input {x + 1}: need one conditional state per outcome")
        p = beh.alice_marginal(x, 0)
        sig.append(np.array([pa * DensityMatrix(np.asarray(r)).matrix for pa, r in zip(p, states)]))
    asm = Assemblage(tuple(sig))
    log.info("regularized assemblage: no-signaling residual %.2e", asm.signaling_residual())
    return asm


def conditional_states(asm: Assemblage) -> list[list[np.ndarray]]:
    """Normalized ``rho_{a|x}``; outcomes with zero weight get the maximally mixed state."""
    out = []
    for s in asm.sigma:
        row = []
        for m in s:
            t = np.trace(m).real
            row.append(m / t if t > 1e-15 else np.eye(2) / 2)
        out.append(row)
    return out


def steering_bits_with_error(
    c: SteeringCertificate, fs, states: Sequence[Sequence[np.ndarray]]
) -> RandomnessResult:
    """Evaluate ``c`` on the assemblage built from frequencies and propagate count noise.

    The certificate is linear, so it is evaluated on the plug-in assemblage
    as is; no signaling repair is applied. Only ``p_NS(a|x)`` carries
    statistical error; it is read off the Bob input 0 block, so
    ``d bound / d f(ab|x,0) = Tr[F_{a|x} rho_{a|x}]``.
    ``fs`` is a :class:`~bellrand.statistics.FrequencyStats`.
    """
    p = c(regularized_assemblage(fs.freq, states))
    var = 0.0
    for x, (f_ops, rhos) in enumerate(zip(c.operators, states)):
        for a, (f_op, rho) in enumerate(zip(f_ops, rhos)):
            g = np.trace(f_op @ np.asarray(rho)).real
            var += g * g * float(np.sum(fs.sigma[x, 0, a] ** 2))
    sigma_p = float(np.sqrt(var))
    sigma_bits = sigma_p / (min(max(p, 1e-300), 1.0) * np.log(2))
    return RandomnessResult(p, c, sigma_bits=sigma_bits, sigma_p=sigma_p)
