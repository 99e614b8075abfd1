"""Device-independent guessing probability over the NPA relaxation.

Eve's strategy is modelled by one subnormalized moment matrix per guess
``e``. Their sum must reproduce the observed Collins-Gisin coordinates; the
objective is the probability that Eve's guess equals Alice's outcome for the
target input. The optimal dual solution is a linear function of the CG
coordinates that upper-bounds the guessing probability of every behavior in
the relaxation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import sdp
from .npa import MomentStructure, build_structure, moment_expression, moment_matrix_constraints
from .quantum import (
    Measurement,
    born_behavior,
    chained_settings,
    projective_setting,
    singlet_with_visibility,
    trine_povm,
)
from .scenario import Behavior, CGVector, Scenario, cg_label, check_no_signaling, to_collins_gisin

log = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def cached_structure(scenario: Scenario, level: int) -> MomentStructure:
    return build_structure(scenario, level)


@dataclass(frozen=True, eq=False)
class Certificate:
    """Linear upper bound ``p_guess <= coefficients . CG(P) + offset``."""

    scenario: Scenario
    target_input: int
    level: int
    coefficients: np.ndarray
    offset: float

    def __call__(self, cg: CGVector) -> float:
        return evaluate_certificate(self, cg)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "target_input": self.target_input + 1,
            "level": self.level,
            "offset": self.offset,
            "coefficients": {cg_label(k): float(c) for k, c in zip(self.scenario.cg_keys(), self.coefficients)},
            "coefficient_vector": self.coefficients.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(
            Scenario.from_dict(d["scenario"]),
            int(d["target_input"]) - 1,
            int(d["level"]),
            np.asarray(d["coefficient_vector"], dtype=float),
            float(d["offset"]),
        )


@dataclass(eq=False)
class RandomnessResult:
    p_guess: float
    certificate: object = None
    sigma_bits: float | None = None
    sigma_p: float | None = None
    solver: dict = field(default_factory=dict)

    @property
    def bits(self) -> float:
        if not self.p_guess > 0:
            return float("inf") if self.p_guess == 0 else float("nan")
        return max(0.0, -float(np.log2(min(self.p_guess, 1.0))))

    def to_dict(self) -> dict:
        return {
            "p_guess": self.p_guess,
            "bits": self.bits,
            "bits_rounded": round(self.bits, 4),
            "sigma_p": self.sigma_p,
            "sigma_bits": self.sigma_bits,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "solver": self.solver,
        }


@dataclass(frozen=True, eq=False)
class GuessingProblem:
    behavior: CGVector
    target_input: int
    level: int = 2

    @property
    def eve_outcomes(self) -> int:
        return self.behavior.scenario.alice_outcomes[self.target_input]

    @classmethod
    def from_behavior(cls, b: Behavior, target_input: int, level: int = 2, ns_tol: float = 1e-9) -> "GuessingProblem":
        report = check_no_signaling(b, ns_tol)
        if not report.passed:
            raise ValueError(f"behavior is signaling ({report.max_violation:.2e}); regularize it first")
        return cls(to_collins_gisin(b), target_input, level)

    def __post_init__(self) -> None:
        if not 0 <= self.target_input < self.behavior.scenario.n_inputs[0]:
            raise ValueError("target input out of range")


@dataclass(frozen=True, eq=False)
class _GuessingLayout:
    problem: sdp.SdpProblem
    const: float
    indicators: dict  # moment variable -> symmetric 0/1 matrix of its slots
    anchored: tuple  # moment variables fixed by the behavior, normalization first
    target_vars: tuple  # variables of A(a|x*) for non-final a


def _indicator(ms: MomentStructure, slots: list) -> np.ndarray:
    f = np.zeros((ms.matrix_dim, ms.matrix_dim))
    for i, j in slots:
        f[i, j] = f[j, i] = 1.0
    return f


def _guessing_sdp(ms: MomentStructure, cg: CGVector, x_star: int) -> _GuessingLayout:
    """Moment form of the guessing problem.

    The free moments of Eve's blocks are the dual variables ``y`` of a
    ``min`` SDP, so the primal matrices ``X`` are a Bell-functional
    certificate. In the last block the anchored moments are eliminated with
    ``Gamma_last = sum_q p_q F_q - sum_{e<last} Gamma_e`` on anchored slots.
    """
    s = ms.scenario
    k = s.alice_outcomes[x_star]
    last = k - 1
    slots = ms.slots()
    anchored = {0: 1.0}
    for key, value in zip(s.cg_keys(), cg.values):
        anchored[ms.prob_index[key]] = float(value)
    target = [ms.prob_index[("A", x_star, a)] for a in range(k - 1)]
    target_set = set(target)

    builder = sdp.SdpBuilder([ms.matrix_dim] * k, "min")
    for v, value in anchored.items():
        for i, j in slots[v]:
            builder.objective_entry(last, i, j, value, symmetric_entries=True)
    for e in range(k):
        for v in range(ms.n_variables):
            if e == last and v in anchored:
                continue
            terms = [(e, i, j, -1.0) for i, j in slots[v]]
            coef = 0.0
            if e < last:
                if v in anchored:
                    terms += [(last, i, j, 1.0) for i, j in slots[v]]
                coef += (v == target[e]) - (v == 0) + (v in target_set)
            builder.add_constraint(terms, coef, symmetric_entries=True)
    const = 1.0 - sum(anchored[v] for v in target)
    indicators = {v: _indicator(ms, slots[v]) for v in anchored}
    return _GuessingLayout(builder.build(), const, indicators, tuple(anchored), tuple(target))


def di_guessing_probability(
    g: GuessingProblem,
    gap_tol: float = 1e-8,
    accept_gap: float = 1e-3,
    raise_on_failure: bool = True,
) -> RandomnessResult:
    """Certified upper bound on Eve's guessing probability for ``g.target_input``.

    The reported value is the certificate evaluated on the input behavior.
    Residual equality violations and any negative eigenvalue of the
    certificate are charged to its offset (every moment is bounded by 1 in
    absolute value), so the bound stays valid when the solver stops short of
    optimality. Degenerate inputs such as extremal behaviors, where the
    optimal certificate is not attained, are accepted when the certified
    bound lies within ``accept_gap`` of the moment-side value.
    """
    s = g.behavior.scenario
    ms = cached_structure(s, g.level)
    lay = _guessing_sdp(ms, g.behavior, g.target_input)
    sol = sdp.solve(lay.problem, gap_tol=gap_tol, keep_iterates=True)
    diag = sol.diagnostics()
    if sol.status == "infeasible":
        if raise_on_failure:
            raise sdp.SolverError(sol)
        return RandomnessResult(float("nan"), None, solver=diag)

    repair = _CertificateRepair(lay.problem, ms.matrix_dim)
    candidates = [sol.X] if sol.optimal else [sol.X] + [it[0] for it in sol.iterates]
    X, slack = min((repair(c) for c in candidates), key=lambda r: sdp._inner(lay.problem.objective, r[0]) + r[1])
    x_last = X[-1]
    coefs = np.zeros(s.cg_dimension)
    for idx, key in enumerate(s.cg_keys()):
        v = ms.prob_index[key]
        coefs[idx] = np.sum(x_last * lay.indicators[v]) - (v in lay.target_vars)
    offset = float(np.sum(x_last * lay.indicators[0]) + 1.0 + slack)
    cert = Certificate(s, g.target_input, g.level, coefs, offset)
    bound = evaluate_certificate(cert, g.behavior)
    lower = lay.const + sol.dual_obj
    tight = bool(np.isfinite(bound) and bound - lower <= accept_gap)
    diag.update(certified_bound=bound, moment_value=lower, certificate_slack=slack, tight=tight)
    if not np.isfinite(bound):
        if raise_on_failure:
            raise sdp.SolverError(sol)
        return RandomnessResult(float("nan"), None, solver=diag)
    marg = g.behavior.alice_marginals[g.target_input]
    floor = max(float(marg.max(initial=0.0)), 1.0 - float(marg.sum()))
    if bound < floor - 1e-6:
        # every behavior in the relaxation has p_guess >= max_a P(a|x*)
        sol.status = "infeasible"
        sol.message = f"certificate {bound:.6f} < max_a P(a|x*) = {floor:.6f}: behavior lies outside the relaxation"
        if raise_on_failure:
            raise sdp.SolverError(sol)
        return RandomnessResult(float("nan"), cert, solver=sol.diagnostics())
    if not tight:
        log.warning("certified bound %.6f exceeds the moment value %.6f by more than %.1e", bound, lower, accept_gap)
    return RandomnessResult(float(np.clip(bound, 0.0, 1.0)), cert, solver=diag)


class _CertificateRepair:
    """Make an approximate certificate rigorous.

    For moments bounded by 1 in absolute value and blocks of total trace at
    most ``dim``, ``b.y <= <C, X> + sum|b - A(X)| + dim * max(0, -lambda_min(X))``.
    Both the raw iterate and its least-norm projection onto ``A(X) = b`` are
    scored; the cheaper one is returned with its slack.
    """

    def __init__(self, p: sdp.SdpProblem, dim: int):
        self.p, self.dim = p, dim
        gram = sum(Ak @ Ak.T for Ak in p.A).toarray()
        try:
            factor = sla.cho_factor(gram)
            self.solve = lambda r: sla.cho_solve(factor, r)
        except np.linalg.LinAlgError:
            pinv = np.linalg.pinv(gram)
            self.solve = lambda r: pinv @ r

    def slack(self, X) -> float:
        res = float(np.sum(np.abs(self.p.b - sdp._apply(self.p.A, X))))
        neg = max(0.0, -min(np.linalg.eigvalsh(x).min() for x in X))
        return res + self.dim * neg

    def __call__(self, X) -> tuple[list, float]:
        p = self.p
        corr = sdp._apply_t(p.A, p.blocks, self.solve(p.b - sdp._apply(p.A, X)))
        Xp = [sdp._sym(x + c) for x, c in zip(X, corr)]
        options = [(X, self.slack(X)), (Xp, self.slack(Xp))]
        return min(options, key=lambda o: sdp._inner(p.objective, o[0]) + o[1])


def evaluate_certificate(c: Certificate, b: Behavior | CGVector) -> float:
    cg = b if isinstance(b, CGVector) else to_collins_gisin(b)
    if cg.scenario != c.scenario:
        raise ValueError("certificate and behavior belong to different scenarios")
    return float(c.coefficients @ cg.values + c.offset)


def frequency_gradient(c: Certificate) -> np.ndarray:
    """d(certificate)/d f(ab|xy) through the CG map with the default anchors."""
    s = c.scenario
    grad = np.zeros(s.shape)
    for coef, key in zip(c.coefficients, s.cg_keys()):
        if key[0] == "A":
            _, x, a = key
            grad[x, 0, a, : s.bob_outcomes[0]] += coef
        elif key[0] == "B":
            _, y, b = key
            grad[0, y, : s.alice_outcomes[0], b] += coef
        else:
            _, x, y, a, b = key
            grad[x, y, a, b] += coef
    return grad


def certified_bits_with_error(c: Certificate, fs) -> RandomnessResult:
    """Evaluate ``c`` on observed frequencies with Gaussian error propagation.

    ``fs`` is a :class:`~bellrand.statistics.FrequencyStats`.
    """
    from .scenario import regularize

    beh = regularize(fs.freq)
    p = evaluate_certificate(c, beh)
    grad = frequency_gradient(c)
    sigma_p = float(np.sqrt(np.sum((grad * fs.sigma) ** 2)))
    p_clip = min(max(p, 1e-300), 1.0)
    sigma_bits = sigma_p / (p_clip * np.log(2))
    return RandomnessResult(p, c, sigma_bits=sigma_bits, sigma_p=sigma_p)


def q2_feasibility(b: Behavior, level: int = 2) -> sdp.SdpSolution:
    """Does a moment matrix reproduce every entry of ``b``?

    Every full-table probability is anchored, so a signaling table gives
    inconsistent equalities and the solver reports infeasibility.
    """
    s = b.scenario
    ms = cached_structure(s, level)
    mt = moment_matrix_constraints(ms)
    builder = sdp.SdpBuilder([mt.dim], "max")
    for slot, rep in mt.ties:
        builder.add_constraint([(0, *slot, 1.0), (0, *rep, -1.0)], 0.0)
    for slot in mt.zeros:
        builder.add_constraint([(0, *slot, 1.0)], 0.0)
    builder.add_constraint([(0, *mt.normalization, 1.0)], 1.0)
    for x, y, a, bb in s.cells():
        expr = moment_expression(ms, x, y, a, bb)
        builder.add_constraint([(0, *mt.representatives[v], c) for v, c in expr.items()], b.table[x, y, a, bb])
    return sdp.solve(builder.build())


# --- settings --------------------------------------------------------------


@dataclass(frozen=True)
class Settings:
    """x-z plane Bloch angles; ``trine`` is the POVM rotation or None."""

    alice: tuple[float, ...]
    bob: tuple[float, ...]
    trine: float | None = 0.0

    @classmethod
    def chained(cls, n: int = 3, povm: bool = True) -> "Settings":
        a, b = chained_settings(n)
        return cls(tuple(a), tuple(b), 0.0 if povm else None)

    def measurements(self) -> tuple[list[Measurement], list[Measurement]]:
        alice = [projective_setting(p) for p in self.alice]
        if self.trine is not None:
            alice.append(trine_povm(self.trine))
        return alice, [projective_setting(p) for p in self.bob]

    def rotated(self, angle: float) -> "Settings":
        return Settings(
            tuple(p + angle for p in self.alice),
            tuple(p + angle for p in self.bob),
            None if self.trine is None else self.trine + angle,
        )

    def as_vector(self) -> np.ndarray:
        extra = [] if self.trine is None else [self.trine]
        return np.array(list(self.alice) + list(self.bob) + extra)

    def with_vector(self, v: Sequence[float]) -> "Settings":
        na, nb = len(self.alice), len(self.bob)
        return Settings(tuple(v[:na]), tuple(v[na : na + nb]), None if self.trine is None else float(v[na + nb]))

    def to_dict(self) -> dict:
        return {"alice": list(self.alice), "bob": list(self.bob), "trine": self.trine}

    @classmethod
    def from_dict(cls, d: dict) -> "Settings":
        return cls(tuple(d["alice"]), tuple(d["bob"]), d.get("trine"))


def simulated_behavior(v: float, settings: Settings) -> Behavior:
    alice, bob = settings.measurements()
    return born_behavior(singlet_with_visibility(v), alice, bob)


def settings_randomness(v: float, settings: Settings, x_star: int, level: int = 2) -> RandomnessResult:
    beh = simulated_behavior(v, settings)
    return di_guessing_probability(GuessingProblem.from_behavior(beh, x_star, level))


def _golden_section(f, lo: float, hi: float, n_eval: int) -> tuple[float, float]:
    """Maximize ``f`` on [lo, hi] with ``n_eval`` evaluations."""
    gr = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max(0, n_eval - 2)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


@dataclass
class OptimizationResult:
    settings: Settings
    result: RandomnessResult
    default_bits: float
    evaluations: int
    history: list = field(default_factory=list)


def optimize_settings(
    v: float,
    n_projective: int = 3,
    use_povm: bool = True,
    x_star: int | None = None,
    level: int = 2,
    restarts: int = 3,
    budget: int = 200,
    line_evals: int = 6,
    span: float = 0.15,
    seed: int = 0,
) -> OptimizationResult:
    """Coordinate search over measurement angles, started from the chained settings.

    Each coordinate is refined by golden-section search in a window of
    half-width ``span`` around its current value. Restarts after the first
    perturb the incumbent randomly. The incumbent is only replaced by strictly
    better settings, so the result never falls below the chained default.
    """
    if not 0 < v <= 1:
        raise ValueError("visibility must lie in (0, 1]")
    if x_star is None:
        x_star = n_projective if use_povm else 0
    rng = np.random.default_rng(seed)
    start = Settings.chained(n_projective, use_povm)
    evals = 0
    history = []

    def bits(s: Settings) -> float:
        nonlocal evals
        evals += 1
        try:
            r = settings_randomness(v, s, x_star, level).bits
        except sdp.SolverError:
            r = -np.inf
        history.append(r)
        return r

    best_s, best_r = start, bits(start)
    default_bits = best_r
    dim = len(start.as_vector())
    # the first coordinate is a global rotation gauge; keep it fixed
    free = list(range(1, dim))
    for restart in range(restarts):
        if evals >= budget:
            break
        vec = best_s.as_vector()
        if restart > 0:
            vec = vec + rng.normal(scale=span / 2, size=dim) * (np.arange(dim) > 0)
        cur_s = best_s.with_vector(vec)
        cur_r = bits(cur_s) if restart > 0 else best_r
        for i in free:
            if evals + line_evals > budget:
                break

            def f(t, i=i):
                w = cur_s.as_vector().copy()
                w[i] = t
                return bits(cur_s.with_vector(w))

            t, r = _golden_section(f, vec[i] - span, vec[i] + span, line_evals)
            if r > cur_r:
                w = cur_s.as_vector().copy()
                w[i] = t
                cur_s, cur_r = cur_s.with_vector(w), r
                vec = w
        if cur_r > best_r:
            best_s, best_r = cur_s, cur_r
    final = settings_randomness(v, best_s, x_star, level)
    return OptimizationResult(best_s, final, default_bits, evals, history)
