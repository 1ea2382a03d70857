"""States, Hamiltonians and dilations for two-qubit batteries."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .qmath import (
    DimensionError,
    HermiticityError,
    herm_defect,
    partial_trace,
    permute_ket,
    von_neumann_entropy,
)

TOL = 1e-9

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


class StateError(ValueError):
    """Input does not describe a valid quantum state."""


def _as_dims(dims: Sequence[int], side: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != side:
        raise DimensionError(f"dims {dims} do not match side length {side}")
    return dims


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", _as_dims(self.dims, m.shape[0]))
        if herm_defect(m) > TOL * max(1.0, float(np.linalg.norm(m))):
            raise StateError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > TOL:
            raise StateError(f"density matrix has trace {np.trace(m).real:.12g}")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -TOL:
            raise StateError("density matrix has a negative eigenvalue")


@dataclass(frozen=True)
class Hamiltonian:
    matrix: np.ndarray
    dims: tuple[int, ...]
    unit: float = 1.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", _as_dims(self.dims, m.shape[0]))
        if herm_defect(m) > TOL * max(1.0, float(np.linalg.norm(m))):
            raise HermiticityError("Hamiltonian is not Hermitian")


@dataclass(frozen=True)
class BipartiteBattery:
    rho: DensityMatrix
    ham: Hamiltonian

    def __post_init__(self):
        if len(self.rho.dims) != 2 or self.rho.dims != self.ham.dims:
            raise DimensionError(f"state dims {self.rho.dims} vs Hamiltonian dims {self.ham.dims}")


@dataclass(frozen=True)
class TripartiteState:
    """State of environment E, battery half A and battery half B, in that order.

    ``ket`` is kept alongside the matrix for pure states so that the
    extraction objective can work with vectors.
    """

    matrix: np.ndarray
    dims: tuple[int, int, int]
    pure: bool
    ket: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        DensityMatrix(self.matrix, self.dims)
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))
        if len(self.dims) != 3:
            raise DimensionError("tripartite state needs dims (d_E, d_A, d_B)")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.pure:
            purity = np.trace(self.matrix @ self.matrix).real
            if abs(purity - 1) > TOL:
                raise StateError(f"state flagged pure has purity {purity:.12g}")

    @classmethod
    def from_ket(cls, psi, dims: Sequence[int]) -> "TripartiteState":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1) > TOL:
            raise StateError(f"ket has norm {nrm:.12g}")
        return cls(np.outer(psi, psi.conj()), tuple(dims), True, psi)

    @property
    def rho_ab(self) -> np.ndarray:
        return partial_trace(self.matrix, self.dims, [1, 2])

    def factor(self) -> np.ndarray:
        """Matrix L with ``matrix == L @ L^dag`` (a single column when pure)."""
        if self.ket is not None:
            return self.ket.reshape(-1, 1)
        w, v = np.linalg.eigh(self.matrix)
        keep = w > 1e-14
        return v[:, keep] * np.sqrt(w[keep])


@dataclass(frozen=True)
class XYParams:
    p: float = 0.5
    q: float = 0.5
    r: float = 1.0


def bell_mixture(p1: float) -> DensityMatrix:
    if not 0.0 <= p1 <= 1.0:
        raise StateError(f"p1 must lie in [0, 1], got {p1}")
    m = p1 * np.outer(PSI_PLUS, PSI_PLUS) + (1 - p1) * np.outer(PSI_MINUS, PSI_MINUS)
    return DensityMatrix(m, (2, 2))


def bell_mixture_purification(p1: float) -> TripartiteState:
    """``sqrt(p1)|0>|psi+> + sqrt(1-p1)|1>|psi->`` with a qubit environment.

    Unlike :func:`purify`, the environment labels are tied to the Bell
    vectors, which is what the controlled-unitary formulas assume.
    """
    if not 0.0 <= p1 <= 1.0:
        raise StateError(f"p1 must lie in [0, 1], got {p1}")
    psi = np.sqrt(p1) * np.kron([1, 0], PSI_PLUS) + np.sqrt(1 - p1) * np.kron([0, 1], PSI_MINUS)
    return TripartiteState.from_ket(psi, (2, 2, 2))


def xy_hamiltonian(params: XYParams | None = None, *, p=None, q=None, r=None) -> Hamiltonian:
    """``p Z(x)I + q I(x)Z + r (X(x)X + Y(x)Y)`` on two qubits."""
    params = params or XYParams()
    p = params.p if p is None else p
    q = params.q if q is None else q
    r = params.r if r is None else r
    m = p * np.kron(SZ, I2) + q * np.kron(I2, SZ) + r * (np.kron(SX, SX) + np.kron(SY, SY))
    return Hamiltonian(m, (2, 2))


def rank_two_state(amps) -> DensityMatrix:
    """Marginal of ``sum_k amps[k] |k // 2>_(AB) |k % 2>_aux`` over the qubit aux."""
    psi = _rank_two_ket(amps)
    m = psi.reshape(4, 2)
    return DensityMatrix(m @ m.conj().T, (2, 2))


def rank_two_dilation(amps) -> TripartiteState:
    """The same pure state as :func:`rank_two_state`, reordered to E, A, B with aux as E."""
    psi = _rank_two_ket(amps)
    return TripartiteState.from_ket(permute_ket(psi, (2, 2, 2), (2, 0, 1)), (2, 2, 2))


def _rank_two_ket(amps) -> np.ndarray:
    psi = np.asarray(amps, dtype=complex).reshape(-1)
    if psi.size != 8:
        raise StateError(f"expected 8 amplitudes, got {psi.size}")
    if abs(np.vdot(psi, psi).real - 1) > TOL:
        raise StateError("rank-two amplitudes are not normalized")
    return psi


def purify(rho: DensityMatrix, cutoff: float = 1e-12, order: str = "descending") -> TripartiteState:
    """Spectral purification ``sum_i sqrt(l_i) |i>_E |v_i>_AB``.

    Eigenvalues below ``cutoff`` are dropped, so ``d_E`` equals the number of
    retained eigenvalues.  ``order`` fixes which eigenvector is attached to
    ``|0>_E``.
    """
    if len(rho.dims) != 2:
        raise DimensionError("purify expects a bipartite state")
    w, v = np.linalg.eigh(rho.matrix)
    idx = [i for i in range(len(w)) if w[i] >= cutoff]
    if order == "descending":
        idx = idx[::-1]
    elif order != "ascending":
        raise ValueError(f"unknown order {order!r}")
    d_e = len(idx)
    d_ab = rho.matrix.shape[0]
    psi = np.zeros(d_e * d_ab, dtype=complex)
    for e, i in enumerate(idx):
        psi[e * d_ab : (e + 1) * d_ab] = np.sqrt(w[i]) * v[:, i]
    psi /= np.linalg.norm(psi)
    return TripartiteState.from_ket(psi, (d_e,) + tuple(rho.dims))


def entanglement_entropy(state: TripartiteState) -> float:
    """Entropy in ebits across the E:AB cut of a pure tripartite state."""
    if not state.pure:
        raise StateError("entanglement entropy is only defined here for pure states")
    return von_neumann_entropy(partial_trace(state.matrix, state.dims, [0]))


def energy(rho, ham: Hamiltonian) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if m.shape != ham.matrix.shape:
        raise DimensionError(f"state shape {m.shape} vs Hamiltonian shape {ham.matrix.shape}")
    e = np.trace(m @ ham.matrix)
    if abs(e.imag) > 1e-10 * max(1.0, abs(e.real)):
        raise HermiticityError(f"energy has imaginary part {e.imag:.3e}")
    return float(e.real)


def ground_state(ham: Hamiltonian) -> DensityMatrix:
    w, v = np.linalg.eigh(ham.matrix)
    g = v[:, 0]
    return DensityMatrix(np.outer(g, g.conj()), ham.dims)


# -- JSON matrix files: {"dims": [...], "re": [[...]], "im": [[...]]} --------


def matrix_to_json(m, dims: Sequence[int]) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dims": [int(d) for d in dims], "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> tuple[np.ndarray, tuple[int, ...]]:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        dims = tuple(int(d) for d in obj["dims"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise ValueError("matrix JSON 're' and 'im' must be equal-shape 2D arrays")
    return re + 1j * im, _as_dims(dims, re.shape[0])


def load_density(path: str | Path) -> DensityMatrix:
    m, dims = matrix_from_json(json.loads(Path(path).read_text()))
    return DensityMatrix(m, dims)


def load_hamiltonian(path: str | Path) -> Hamiltonian:
    m, dims = matrix_from_json(json.loads(Path(path).read_text()))
    return Hamiltonian(m, dims)


def load_tripartite(path: str | Path) -> TripartiteState:
    m, dims = matrix_from_json(json.loads(Path(path).read_text()))
    purity = np.trace(m @ m).real
    if abs(purity - 1) <= TOL:
        w, v = np.linalg.eigh(m)
        return TripartiteState.from_ket(v[:, -1], dims)
    return TripartiteState(m, dims, False)
