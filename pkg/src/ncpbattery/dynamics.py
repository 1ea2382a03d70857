"""Unitary parametrizations on E(x)A and the environment-assisted local map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .battery import SX, SY, SZ, DensityMatrix, TripartiteState
from .qmath import DimensionError, is_unitary, partial_trace

PI = np.pi

XX = np.kron(SX, SX)
YY = np.kron(SY, SY)
ZZ = np.kron(SZ, SZ)


@dataclass(frozen=True)
class CartanParams:
    """Angles of ``(U_E (x) U_A) U_d (V_E (x) V_A)``.

    Local factor ``k`` uses ``(alpha_k, beta_k, gamma_k)`` with k = 1..4 for
    U_A, U_E, V_A, V_E respectively.
    """

    alpha: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    beta: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    gamma: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    eta: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_vector(self) -> np.ndarray:
        locs = [x for k in range(4) for x in (self.alpha[k], self.beta[k], self.gamma[k])]
        return np.array(locs + list(self.eta), dtype=float)

    @classmethod
    def from_vector(cls, x) -> "CartanParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (15,):
            raise ValueError(f"expected 15 Cartan angles, got shape {x.shape}")
        trip = x[:12].reshape(4, 3)
        return cls(tuple(trip[:, 0]), tuple(trip[:, 1]), tuple(trip[:, 2]), tuple(x[12:]))


# alpha in [0, pi], beta in [0, 4 pi), gamma in [0, 2 pi], eta in [0, pi/2]
CARTAN_BOUNDS = [(0.0, PI), (0.0, 4 * PI), (0.0, 2 * PI)] * 4 + [(0.0, PI / 2)] * 3


@dataclass(frozen=True)
class BlockUnitaryParams:
    theta: tuple[float, float] = (0.0, 0.0)
    chi: tuple[float, float] = (0.0, 0.0)
    phi: tuple[float, float] = (0.0, 0.0)


def local_su2(alpha, beta, gamma) -> np.ndarray:
    """Single-qubit unitary in the Euler-type form used for all local factors.

    Broadcasts over array-valued angles; the matrix axes come last.
    """
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (alpha, beta, gamma)))
    c = np.cos(alpha / 2)
    s = np.sin(alpha / 2)
    u = np.empty(alpha.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c * np.exp(0.5j * (beta + gamma))
    u[..., 0, 1] = s * np.exp(-0.5j * (beta - gamma))
    u[..., 1, 0] = -s * np.exp(0.5j * (beta - gamma))
    u[..., 1, 1] = c * np.exp(-0.5j * (beta + gamma))
    return u


def _bkron(a, b) -> np.ndarray:
    return np.einsum("...ij,...kl->...ikjl", a, b).reshape(a.shape[:-2] + (a.shape[-2] * b.shape[-2],) * 2)


def nonlocal_core(eta_x, eta_y, eta_z) -> np.ndarray:
    """``exp(-i (ex XX + ey YY + ez ZZ))`` as a product of commuting closed-form factors."""
    out = None
    for eta, p in ((eta_x, XX), (eta_y, YY), (eta_z, ZZ)):
        eta = np.asarray(eta, dtype=float)[..., None, None]
        f = np.cos(eta) * np.eye(4) - 1j * np.sin(eta) * p
        out = f if out is None else out @ f
    return out


def cartan_unitaries(x) -> np.ndarray:
    """Vectorized Cartan construction; ``x`` has shape (..., 15)."""
    x = np.asarray(x, dtype=float)
    loc = local_su2(x[..., 0:12:3], x[..., 1:12:3], x[..., 2:12:3])  # (..., 4, 2, 2)
    u_a, u_e, v_a, v_e = (loc[..., k, :, :] for k in range(4))
    core = nonlocal_core(x[..., 12], x[..., 13], x[..., 14])
    return _bkron(u_e, u_a) @ core @ _bkron(v_e, v_a)


def cartan_unitary(p: CartanParams) -> np.ndarray:
    return cartan_unitaries(p.to_vector())


def controlled_unitary(alpha2, beta2, gamma2) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) U_2`` with the environment as control."""
    u = np.eye(4, dtype=complex)
    u[2:, 2:] = local_su2(alpha2, beta2, gamma2)
    return u


def block_su2(theta, chi, phi) -> np.ndarray:
    return np.array(
        [
            [np.exp(1j * theta) * np.cos(phi), np.exp(1j * chi) * np.sin(phi)],
            [-np.exp(-1j * chi) * np.sin(phi), np.exp(-1j * theta) * np.cos(phi)],
        ]
    )


def block_unitary(p: BlockUnitaryParams) -> np.ndarray:
    u = np.zeros((4, 4), dtype=complex)
    for k in range(2):
        u[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = block_su2(p.theta[k], p.chi[k], p.phi[k])
    return u


def block_unitary_from_vector(v) -> np.ndarray:
    """Block unitary from ``(phi1, phi2, theta1, chi1, theta2, chi2)``, the Hessian ordering."""
    f1, f2, t1, c1, t2, c2 = v
    return block_unitary(BlockUnitaryParams((t1, t2), (c1, c2), (f1, f2)))


def apply_local_map(state: TripartiteState, u_ea) -> DensityMatrix:
    """``Tr_E[(U_EA (x) I_B) rho_EAB (U_EA^dag (x) I_B)]``."""
    u_ea = np.asarray(u_ea, dtype=complex)
    d_e, d_a, d_b = state.dims
    if u_ea.shape != (d_e * d_a, d_e * d_a):
        raise DimensionError(f"unitary of shape {u_ea.shape} does not act on E(x)A of size {d_e * d_a}")
    if not is_unitary(u_ea, 1e-9):
        raise ValueError("u_ea is not unitary")
    big = np.kron(u_ea, np.eye(d_b))
    out = partial_trace(big @ state.matrix @ big.conj().T, state.dims, [1, 2])
    return DensityMatrix(0.5 * (out + out.conj().T), (d_a, d_b))


def energies_after(unitaries, factor, h_ab, dims) -> np.ndarray:
    """``Tr[(U (x) I) rho (U^dag (x) I) (I_E (x) H)]`` for a stack of unitaries.

    ``factor`` is any L with ``rho_EAB = L L^dag``; only matrix products are
    used, so a whole optimizer population is evaluated in one call.
    """
    d_e, d_a, d_b = dims
    n = d_e * d_a
    r = factor.shape[1]
    p = factor.reshape(n, d_b * r)
    phi = np.matmul(unitaries, p)  # (..., n, d_b * r)
    phi = phi.reshape(phi.shape[:-2] + (d_e, d_a * d_b, r))
    hphi = np.einsum("ab,...ebr->...ear", h_ab, phi)
    return np.einsum("...ear,...ear->...", phi.conj(), hphi).real
