"""Two-qubit polarization states, measurements and Born-rule statistics.

Basis convention: ``|H> = (1, 0)``, ``|V> = (0, 1)``. A Bloch direction in
the x-z plane at angle ``phi`` is ``(sin phi, 0, cos phi)``, so ``phi = 0``
is ``|H>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import Behavior, Scenario

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
SINGLET = (np.kron(H, V) - np.kron(V, H)) / np.sqrt(2)

# angles of the trine Bloch vectors |V>, -(|V>+sqrt3|H>)/2, -(|V>-sqrt3|H>)/2
TRINE_ANGLES = (np.pi, np.pi / 3, -np.pi / 3)


def _herm_check(m: np.ndarray, tol: float) -> bool:
    return np.max(np.abs(m - m.conj().T)) <= tol


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError("density matrix must be 2x2 or 4x4")
        if not _herm_check(m, 1e-12):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Measurement:
    """Qubit measurement given by its effects, one per outcome."""

    effects: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        effs = tuple(np.array(e, dtype=complex) for e in self.effects)
        if len(effs) < 2:
            raise ValueError("a measurement needs at least two outcomes")
        for e in effs:
            if e.shape != (2, 2) or not _herm_check(e, 1e-10):
                raise ValueError("effects must be 2x2 Hermitian matrices")
            if np.linalg.eigvalsh(e).min() < -1e-10:
                raise ValueError("effect is not positive semidefinite")
            e.setflags(write=False)
        if np.max(np.abs(sum(effs) - np.eye(2))) > 1e-10:
            raise ValueError("effects do not sum to the identity")
        object.__setattr__(self, "effects", effs)

    def __len__(self) -> int:
        return len(self.effects)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.array([np.trace(e @ rho).real for e in self.effects])

    def to_dict(self) -> dict:
        return {"effects": [_cmat_to_json(e) for e in self.effects]}

    @classmethod
    def from_dict(cls, d: dict) -> "Measurement":
        return cls(tuple(_cmat_from_json(e) for e in d["effects"]))


def _cmat_to_json(m: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def _cmat_from_json(data: list) -> np.ndarray:
    z = np.array([complex(re, im) for re, im in data])
    n = int(round(np.sqrt(z.size)))
    return z.reshape(n, n)


def bloch_ket(phi: float) -> np.ndarray:
    """Pure state with Bloch vector ``(sin phi, 0, cos phi)``."""
    return np.cos(phi / 2) * H + np.sin(phi / 2) * V


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def singlet_with_visibility(v: float) -> DensityMatrix:
    """Isotropic noise model ``v |psi-><psi-| + (1 - v) I/4``."""
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    return DensityMatrix(v * projector(SINGLET) + (1 - v) * np.eye(4) / 4)


def projective_setting(phi: float) -> Measurement:
    """Two-outcome measurement along ``+-(sin phi, 0, cos phi)``."""
    p = projector(bloch_ket(phi))
    return Measurement((p, np.eye(2) - p))


def chained_settings(n: int) -> tuple[list[float], list[float]]:
    """Bloch angles maximizing the n-setting chained Bell expression on the singlet."""
    if n < 2:
        raise ValueError("chained settings need n >= 2")
    alice = [x * np.pi / n for x in range(n)]
    bob = [(2 * y + 1) * np.pi / (2 * n) for y in range(n)]
    return alice, bob


def trine_povm(rotation: float = 0.0) -> Measurement:
    """Symmetric three-outcome POVM with effects ``(2/3)|psi_i><psi_i|``.

    With ``rotation=0`` the states are ``|V>`` and ``-(|V> +- sqrt3 |H>)/2``.
    A nonzero rotation turns all three Bloch vectors within the x-z plane.
    """
    return Measurement(tuple(2 / 3 * projector(bloch_ket(t + rotation)) for t in TRINE_ANGLES))


def trine_states() -> list[np.ndarray]:
    s3 = np.sqrt(3)
    return [V.copy(), -(V + s3 * H) / 2, -(V - s3 * H) / 2]


def born_behavior(rho: DensityMatrix, alice: Sequence[Measurement], bob: Sequence[Measurement]) -> Behavior:
    """P(ab|xy) = Tr[rho (A_a|x (x) B_b|y)]."""
    if rho.dim != 4:
        raise ValueError("born_behavior needs a two-qubit state")
    scenario = Scenario(tuple(len(m) for m in alice), tuple(len(m) for m in bob))
    r = rho.matrix.reshape(2, 2, 2, 2)
    table = np.zeros(scenario.shape)
    for x, ma in enumerate(alice):
        for y, mb in enumerate(bob):
            for a, ea in enumerate(ma.effects):
                for b, eb in enumerate(mb.effects):
                    # Tr[rho (ea (x) eb)] with rho indexed [i, j, k, l] = <ij|rho|kl>
                    table[x, y, a, b] = np.einsum("ijkl,ki,lj->", r, ea, eb).real
    return Behavior(scenario, table, neg_tol=1e-12)


def reduced_bob(rho: DensityMatrix) -> np.ndarray:
    return np.einsum("ijil->jl", rho.matrix.reshape(2, 2, 2, 2))


@dataclass(frozen=True, eq=False)
class Assemblage:
    """Unnormalized conditional states ``sigma[x][a]`` on Bob's qubit."""

    sigma: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        sig = tuple(np.array(s, dtype=complex) for s in self.sigma)
        for s in sig:
            if s.ndim != 3 or s.shape[1:] != (2, 2) or s.shape[0] < 2:
                raise ValueError("each input needs an array of shape (outcomes, 2, 2)")
            for m in s:
                if not _herm_check(m, 1e-10) or np.linalg.eigvalsh(m).min() < -1e-10:
                    raise ValueError("assemblage elements must be PSD")
            s.setflags(write=False)
        object.__setattr__(self, "sigma", sig)
        if abs(np.trace(sig[0].sum(axis=0)).real - 1.0) > 1e-10:
            raise ValueError("assemblage is not normalized")

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(s.shape[0] for s in self.sigma)

    def reduced_states(self) -> np.ndarray:
        return np.array([s.sum(axis=0) for s in self.sigma])

    def signaling_residual(self) -> float:
        red = self.reduced_states()
        return float(np.max(np.abs(red - red[0])))

    def marginals(self) -> list[np.ndarray]:
        return [np.einsum("aii->a", s).real for s in self.sigma]

    def to_dict(self) -> dict:
        return {"sigma": [[_cmat_to_json(m) for m in s] for s in self.sigma]}

    @classmethod
    def from_dict(cls, d: dict) -> "Assemblage":
        return cls(tuple(np.array([_cmat_from_json(m) for m in s]) for s in d["sigma"]))


def assemblage_of(rho: DensityMatrix, alice: Sequence[Measurement]) -> Assemblage:
    """sigma_{a|x} = Tr_A[(A_a|x (x) I) rho]."""
    if rho.dim != 4:
        raise ValueError("assemblage_of needs a two-qubit state")
    r = rho.matrix.reshape(2, 2, 2, 2)
    sig = []
    for m in alice:
        sig.append(np.array([np.einsum("ki,ijkl->jl", e, r) for e in m.effects]))
    return Assemblage(tuple(sig))


# --- Sagnac interferometer -------------------------------------------------
#
# Ordering of the 4-dim space is polarization (x) path: index = 2*pol + path,
# pol 0 = H, 1 = V; path 0 = |0>, 1 = |1>.


@dataclass(frozen=True)
class SagnacCircuit:
    theta1: float
    theta2: float
    theta3: float

    @classmethod
    def trine_settings(cls) -> "SagnacCircuit":
        return cls(0.0, 2 * np.arcsin(np.sqrt(2 / 3)), np.pi / 2)


def wave_plate(theta: float) -> np.ndarray:
    """Polarization map of a wave plate set to ``theta``.

    Reflection ``[[c, -s], [-s, -c]]`` with ``c, s = cos(theta/2), sin(theta/2)``.
    This is the convention under which the nominal interferometer angles
    produce the trine; ``theta = 0`` gives ``diag(1, -1)``.
    """
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [-s, -c]], dtype=complex)


def _path_controlled(op: np.ndarray, path: int) -> np.ndarray:
    proj = np.zeros((2, 2))
    proj[path, path] = 1.0
    return np.kron(op, proj) + np.kron(np.eye(2), np.eye(2) - proj)


# PBS: |H>|p> -> |H>|p>, |V>|p> -> |V>|p xor 1>
CNOT = np.kron(np.diag([1.0, 0.0]), np.eye(2)) + np.kron(np.diag([0.0, 1.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))


def sagnac_unitary(c: SagnacCircuit) -> np.ndarray:
    """U = C3(theta3) CNOT C2(theta2) C1(theta1) CNOT on polarization (x) path."""
    c1 = _path_controlled(wave_plate(c.theta1), 0)
    c2 = _path_controlled(wave_plate(c.theta2), 1)
    c3 = _path_controlled(wave_plate(c.theta3), 0)
    return c3 @ CNOT @ c2 @ c1 @ CNOT


# Detection ports as rows of U: output mode |1> (both polarizations), then
# mode |0> after the final PBS split into H and V.
PORTS = {"mode1": (1, 3), "mode0_H": (0,), "mode0_V": (2,)}
DEFAULT_PORT_MAP = ("mode1", "mode0_H", "mode0_V")


def port_amplitudes(U: np.ndarray, ket: np.ndarray) -> dict[str, float]:
    """Amplitude magnitude reaching each port for input ``ket`` on path |0>."""
    out = U @ np.kron(np.asarray(ket, dtype=complex), np.array([1.0, 0.0]))
    return {name: float(np.linalg.norm(out[list(rows)])) for name, rows in PORTS.items()}


def induced_povm(U: np.ndarray, port_map: Sequence[str] = DEFAULT_PORT_MAP) -> Measurement:
    """Polarization POVM seen when a photon enters on path |0> and exits at the ports."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (4, 4) or np.max(np.abs(U.conj().T @ U - np.eye(4))) > 1e-10:
        raise ValueError("induced_povm needs a 4x4 unitary")
    if sorted(port_map) != sorted(PORTS):
        raise ValueError(f"port_map must be a permutation of {sorted(PORTS)}")
    cols = [0, 2]  # |H>|0>, |V>|0>
    effects = []
    for name in port_map:
        block = U[np.ix_(list(PORTS[name]), cols)]
        effects.append(block.conj().T @ block)
    return Measurement(tuple(effects))
