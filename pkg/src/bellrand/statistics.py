"""Finite-statistics simulation: Poisson coincidence counts and their frequencies.

Random numbers come from numpy's PCG64 generator (``default_rng``). Seeds
for independent runs are derived with :func:`split_seeds`, which spawns
children of a ``SeedSequence``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import Behavior, FrequencyTable, Scenario


@dataclass(frozen=True, eq=False)
class CountTable:
    """Coincidence counts N(ab|xy); cells outside the scenario stay at zero."""

    scenario: Scenario
    counts: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        c = np.array(self.counts)
        if c.shape != self.scenario.shape:
            raise ValueError(f"counts must have shape {self.scenario.shape}")
        if not np.issubdtype(c.dtype, np.integer):
            if np.any(c != np.round(c)):
                raise ValueError("counts must be integers")
            c = c.astype(np.int64)
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        if np.any(c[~self.scenario.valid_mask()] != 0):
            raise ValueError("counts present in cells outside the scenario")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=(2, 3))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["x", "y", "a", "b", "count"])
        for x, y, a, b in self.scenario.cells():
            w.writerow([x + 1, y + 1, a + 1, b + 1, int(self.counts[x, y, a, b])])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, scenario: Scenario | None = None) -> "CountTable":
        """Parse ``x,y,a,b,count`` rows (1-based); the scenario is inferred if not given."""
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or set(rows[0]) != {"x", "y", "a", "b", "count"}:
            raise ValueError("count CSV needs the header x,y,a,b,count")
        try:
            recs = [(int(r["x"]) - 1, int(r["y"]) - 1, int(r["a"]) - 1, int(r["b"]) - 1, int(r["count"])) for r in rows]
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed count row: {exc}") from None
        if any(min(r[:4]) < 0 for r in recs):
            raise ValueError("indices are 1-based")
        if scenario is None:
            nx, ny = max(r[0] for r in recs) + 1, max(r[1] for r in recs) + 1
            ka, kb = [0] * nx, [0] * ny
            for x, y, a, b, _ in recs:
                ka[x], kb[y] = max(ka[x], a + 1), max(kb[y], b + 1)
            scenario = Scenario(tuple(ka), tuple(kb))
        counts = np.zeros(scenario.shape, dtype=np.int64)
        valid = scenario.valid_mask()
        for x, y, a, b, n in recs:
            if any(i >= n for i, n in zip((x, y, a, b), scenario.shape)) or not valid[x, y, a, b]:
                raise ValueError(f"cell ({x + 1},{y + 1},{a + 1},{b + 1}) is outside the scenario")
            counts[x, y, a, b] += n
        return cls(scenario, counts)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path: str | Path, scenario: Scenario | None = None) -> "CountTable":
        return cls.from_csv(Path(path).read_text(), scenario)


def split_seeds(seed: int, n: int) -> list[int]:
    """``n`` independent 63-bit seeds spawned from ``SeedSequence(seed)``."""
    return [int(c.generate_state(2, np.uint64)[0] >> np.uint64(1)) for c in np.random.SeedSequence(seed).spawn(n)]


def sample_counts(b: Behavior, n_per_setting: int, seed: int) -> CountTable:
    """Independent Poisson counts with means ``n_per_setting * P(ab|xy)``."""
    if n_per_setting < 1:
        raise ValueError("n_per_setting must be at least 1")
    rng = np.random.default_rng(seed)
    means = n_per_setting * np.clip(b.table, 0.0, None) * b.scenario.valid_mask()
    return CountTable(b.scenario, rng.poisson(means), seed)


@dataclass(frozen=True, eq=False)
class FrequencyStats:
    freq: FrequencyTable
    sigma: np.ndarray
    seed: int | None = None

    def to_dict(self) -> dict:
        d = self.freq.to_dict()
        d["sigma"] = np.asarray(self.sigma).tolist()
        d["seed"] = self.seed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyStats":
        return cls(FrequencyTable.from_dict(d), np.asarray(d["sigma"], dtype=float), d.get("seed"))


def frequencies(c: CountTable) -> FrequencyStats:
    """``f = N / N_tot`` per setting, ``sigma = sqrt(N) / N_tot``; zero counts get ``1 / N_tot``."""
    tot = c.totals
    if np.any(tot <= 0):
        bad = [(x + 1, y + 1) for x, y in zip(*np.nonzero(tot <= 0))]
        raise ValueError(f"settings without counts: {bad}")
    n = c.counts.astype(float)
    t = tot[:, :, None, None].astype(float)
    sigma = np.where(n > 0, np.sqrt(n), 1.0) / t * c.scenario.valid_mask()
    return FrequencyStats(FrequencyTable(c.scenario, n / t, tot), sigma, c.seed)
