"""Bell scenarios, behaviors and the Collins-Gisin parametrization.

A behavior P(ab|xy) is stored as a dense tensor indexed ``[x, y, a, b]``.
Inputs may have different outcome counts; the tensor is padded with zeros up
to the largest count and padded cells are never read.

All indices are 0-based in code. The CSV/JSON label helpers convert to the
1-based convention used in data files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    """Outcome counts per input for Alice and Bob."""

    alice_outcomes: tuple[int, ...]
    bob_outcomes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice_outcomes", tuple(int(k) for k in self.alice_outcomes))
        object.__setattr__(self, "bob_outcomes", tuple(int(k) for k in self.bob_outcomes))
        if not self.alice_outcomes or not self.bob_outcomes:
            raise ValueError("each party needs at least one input")
        if min(self.alice_outcomes + self.bob_outcomes) < 2:
            raise ValueError("every input needs at least two outcomes")

    @property
    def n_inputs(self) -> tuple[int, int]:
        return len(self.alice_outcomes), len(self.bob_outcomes)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (
            len(self.alice_outcomes),
            len(self.bob_outcomes),
            max(self.alice_outcomes),
            max(self.bob_outcomes),
        )

    @property
    def cg_dimension(self) -> int:
        ka = [k - 1 for k in self.alice_outcomes]
        kb = [k - 1 for k in self.bob_outcomes]
        return sum(ka) + sum(kb) + sum(ka) * sum(kb)

    def cells(self):
        """Yield every valid ``(x, y, a, b)``."""
        for x, kx in enumerate(self.alice_outcomes):
            for y, ly in enumerate(self.bob_outcomes):
                for a in range(kx):
                    for b in range(ly):
                        yield x, y, a, b

    def valid_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for x, kx in enumerate(self.alice_outcomes):
            for y, ly in enumerate(self.bob_outcomes):
                mask[x, y, :kx, :ly] = True
        return mask

    def cg_keys(self) -> list[tuple]:
        """CG coordinates in canonical order.

        Keys are ``("A", x, a)``, ``("B", y, b)`` and ``("AB", x, y, a, b)``,
        with the last outcome of every input dropped.
        """
        keys: list[tuple] = []
        for x, kx in enumerate(self.alice_outcomes):
            keys.extend(("A", x, a) for a in range(kx - 1))
        for y, ly in enumerate(self.bob_outcomes):
            keys.extend(("B", y, b) for b in range(ly - 1))
        for x, kx in enumerate(self.alice_outcomes):
            for y, ly in enumerate(self.bob_outcomes):
                for a in range(kx - 1):
                    keys.extend(("AB", x, y, a, b) for b in range(ly - 1))
        return keys

    def to_dict(self) -> dict:
        return {"alice_outcomes": list(self.alice_outcomes), "bob_outcomes": list(self.bob_outcomes)}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(tuple(d["alice_outcomes"]), tuple(d["bob_outcomes"]))

    def restrict_alice(self, inputs: Sequence[int]) -> "Scenario":
        return Scenario(tuple(self.alice_outcomes[x] for x in inputs), self.bob_outcomes)


def cg_label(key: tuple) -> str:
    """Human readable, 1-based label for a CG coordinate key."""
    if key[0] == "A":
        return f"P(a={key[2] + 1}|x={key[1] + 1})"
    if key[0] == "B":
        return f"P(b={key[2] + 1}|y={key[1] + 1})"
    _, x, y, a, b = key
    return f"P(a={a + 1},b={b + 1}|x={x + 1},y={y + 1})"


@dataclass(frozen=True)
class NegativityReport:
    min_entry: float
    n_negative: int
    threshold: float = 1e-9

    def to_dict(self) -> dict:
        return {"min_entry": self.min_entry, "n_negative": self.n_negative, "threshold": self.threshold}


@dataclass(frozen=True, eq=False)
class Behavior:
    """Conditional probability table P(ab|xy).

    ``neg_tol`` bounds how negative an entry may be; regularized tables are
    built with ``neg_tol=inf`` and carry a :class:`NegativityReport` instead.
    No-signaling is not enforced here, see :func:`check_no_signaling`.
    """

    scenario: Scenario
    table: np.ndarray
    neg_tol: float = 0.0
    negativity: NegativityReport | None = None

    def __post_init__(self) -> None:
        t = np.array(self.table, dtype=float)
        if t.shape != self.scenario.shape:
            raise ValueError(f"table shape {t.shape} does not match scenario {self.scenario.shape}")
        t[~self.scenario.valid_mask()] = 0.0
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        if np.any(t < -self.neg_tol):
            raise ValueError(f"negative probability {t.min():.3g} below -{self.neg_tol}")
        sums = t.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > NORM_TOL * 10:
            raise ValueError(f"table not normalized (max error {np.max(np.abs(sums - 1.0)):.3g})")

    def alice_marginal(self, x: int, y: int) -> np.ndarray:
        return self.table[x, y].sum(axis=1)[: self.scenario.alice_outcomes[x]]

    def bob_marginal(self, x: int, y: int) -> np.ndarray:
        return self.table[x, y].sum(axis=0)[: self.scenario.bob_outcomes[y]]

    def restrict_alice(self, inputs: Sequence[int]) -> "Behavior":
        """Sub-behavior keeping only the listed Alice inputs."""
        sub = self.scenario.restrict_alice(inputs)
        table = self.table[list(inputs)][:, :, : max(sub.alice_outcomes)]
        return Behavior(sub, table, self.neg_tol)

    def to_dict(self) -> dict:
        s = self.scenario
        return {
            "scenario": s.to_dict(),
            "table": [
                [self.table[x, y, : s.alice_outcomes[x], : s.bob_outcomes[y]].tolist() for y in range(s.n_inputs[1])]
                for x in range(s.n_inputs[0])
            ],
            "negativity": None if self.negativity is None else self.negativity.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict, neg_tol: float = 0.0) -> "Behavior":
        s = Scenario.from_dict(d["scenario"])
        table = np.zeros(s.shape)
        for x, row in enumerate(d["table"]):
            for y, block in enumerate(row):
                block = np.asarray(block, dtype=float)
                table[x, y, : block.shape[0], : block.shape[1]] = block
        neg = d.get("negativity")
        report = NegativityReport(**neg) if neg else None
        return cls(s, table, neg_tol, report)


def uniform_behavior(scenario: Scenario) -> Behavior:
    table = np.zeros(scenario.shape)
    for x, y, a, b in scenario.cells():
        table[x, y, a, b] = 1.0 / (scenario.alice_outcomes[x] * scenario.bob_outcomes[y])
    return Behavior(scenario, table)


@dataclass(frozen=True)
class FrequencyTable:
    """Normalized observed frequencies f(ab|xy) with per-setting totals."""

    scenario: Scenario
    freq: np.ndarray
    totals: np.ndarray

    def __post_init__(self) -> None:
        f = np.array(self.freq, dtype=float)
        n = np.array(self.totals)
        if f.shape != self.scenario.shape:
            raise ValueError("frequency shape does not match scenario")
        if n.shape != self.scenario.n_inputs:
            raise ValueError("totals must have one entry per (x, y)")
        if np.any(n <= 0):
            raise ValueError("every setting needs a positive number of counts")
        if np.any(f < 0):
            raise ValueError("frequencies must be nonnegative")
        if np.max(np.abs(f.sum(axis=(2, 3)) - 1.0)) > NORM_TOL * 10:
            raise ValueError("frequencies are not normalized per setting")
        f.setflags(write=False)
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "totals", n)

    def as_behavior(self) -> Behavior:
        return Behavior(self.scenario, self.freq)

    def to_dict(self) -> dict:
        b = self.as_behavior().to_dict()
        b["totals"] = np.asarray(self.totals).tolist()
        b.pop("negativity")
        return b

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyTable":
        b = Behavior.from_dict({**d, "negativity": None})
        return cls(b.scenario, b.table, np.asarray(d["totals"]))


@dataclass(frozen=True, eq=False)
class CGVector:
    """Collins-Gisin coordinates of a behavior.

    ``values`` follows :meth:`Scenario.cg_keys` order: Alice marginals,
    Bob marginals, then joints.
    """

    scenario: Scenario
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.scenario.cg_dimension:
            raise ValueError(f"CG vector has {v.size} entries, scenario needs {self.scenario.cg_dimension}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def keys(self) -> list[tuple]:
        return self.scenario.cg_keys()

    def as_dict(self) -> dict[tuple, float]:
        return dict(zip(self.keys, self.values.tolist()))

    @property
    def alice_marginals(self) -> list[np.ndarray]:
        out, i = [], 0
        for k in self.scenario.alice_outcomes:
            out.append(self.values[i : i + k - 1])
            i += k - 1
        return out

    @property
    def bob_marginals(self) -> list[np.ndarray]:
        i = sum(k - 1 for k in self.scenario.alice_outcomes)
        out = []
        for k in self.scenario.bob_outcomes:
            out.append(self.values[i : i + k - 1])
            i += k - 1
        return out

    @property
    def joints(self) -> dict[tuple[int, int], np.ndarray]:
        s = self.scenario
        i = sum(k - 1 for k in s.alice_outcomes) + sum(k - 1 for k in s.bob_outcomes)
        out = {}
        for x, kx in enumerate(s.alice_outcomes):
            for y, ly in enumerate(s.bob_outcomes):
                n = (kx - 1) * (ly - 1)
                out[x, y] = self.values[i : i + n].reshape(kx - 1, ly - 1)
                i += n
        return out


def to_collins_gisin(b: Behavior, alice_anchor: int = 0, bob_anchor: int = 0) -> CGVector:
    """CG coordinates of ``b``.

    Alice marginals are read at Bob's input ``alice_anchor`` and Bob's at
    Alice's input ``bob_anchor``, so a signaling table maps to a well defined
    (no-signaling) point.
    """
    s = b.scenario
    if b.table.shape != s.shape:
        raise ValueError("behavior table does not match its scenario")
    vals = []
    for x, kx in enumerate(s.alice_outcomes):
        vals.extend(b.alice_marginal(x, alice_anchor)[: kx - 1])
    for y, ly in enumerate(s.bob_outcomes):
        vals.extend(b.bob_marginal(bob_anchor, y)[: ly - 1])
    for x, kx in enumerate(s.alice_outcomes):
        for y, ly in enumerate(s.bob_outcomes):
            vals.extend(b.table[x, y, : kx - 1, : ly - 1].ravel())
    return CGVector(s, np.array(vals))


def from_collins_gisin(v: CGVector, neg_threshold: float = 1e-9) -> Behavior:
    """Rebuild the full table; dropped outcomes are fixed by normalization.

    The result is exactly no-signaling. Negative entries are kept and
    summarized in ``Behavior.negativity``.
    """
    s = v.scenario
    pa, pb, joints = v.alice_marginals, v.bob_marginals, v.joints
    table = np.zeros(s.shape)
    for x, kx in enumerate(s.alice_outcomes):
        for y, ly in enumerate(s.bob_outcomes):
            j = joints[x, y]
            t = table[x, y]
            t[: kx - 1, : ly - 1] = j
            t[: kx - 1, ly - 1] = pa[x] - j.sum(axis=1)
            t[kx - 1, : ly - 1] = pb[y] - j.sum(axis=0)
            t[kx - 1, ly - 1] = 1.0 - pa[x].sum() - pb[y].sum() + j.sum()
    valid = table[s.valid_mask()]
    report = NegativityReport(float(valid.min()), int(np.sum(valid < -neg_threshold)), neg_threshold)
    return Behavior(s, table, neg_tol=np.inf, negativity=report)


def regularize(f: FrequencyTable | Behavior, alice_anchor: int = 0, bob_anchor: int = 0) -> Behavior:
    """No-signaling behavior obtained by a CG round trip of observed frequencies."""
    b = f.as_behavior() if isinstance(f, FrequencyTable) else f
    return from_collins_gisin(to_collins_gisin(b, alice_anchor, bob_anchor))


@dataclass(frozen=True)
class SignalingReport:
    alice_to_bob: float
    bob_to_alice: float
    tol: float

    @property
    def max_violation(self) -> float:
        return max(self.alice_to_bob, self.bob_to_alice)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def to_dict(self) -> dict:
        return {
            "alice_to_bob": self.alice_to_bob,
            "bob_to_alice": self.bob_to_alice,
            "max_violation": self.max_violation,
            "tol": self.tol,
            "passed": self.passed,
        }


def check_no_signaling(b: Behavior, tol: float = 1e-12) -> SignalingReport:
    """Largest spread of a marginal across the other party's inputs.

    ``bob_to_alice`` measures how much P(a|x, y) depends on y, and
    ``alice_to_bob`` how much P(b|x, y) depends on x.
    """
    t = b.table
    alice_marg = t.sum(axis=3)  # [x, y, a]
    bob_marg = t.sum(axis=2)  # [x, y, b]
    b_to_a = float(np.max(alice_marg.max(axis=1) - alice_marg.min(axis=1)))
    a_to_b = float(np.max(bob_marg.max(axis=0) - bob_marg.min(axis=0)))
    return SignalingReport(a_to_b, b_to_a, tol)
