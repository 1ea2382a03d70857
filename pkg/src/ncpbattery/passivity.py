"""Passivity certifiers for bipartite batteries and their environment dilations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .battery import BipartiteBattery, DensityMatrix, Hamiltonian, TripartiteState
from .dynamics import block_unitary_from_vector
from .qmath import (
    DimensionError,
    herm_defect,
    kron_all,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    psd_check,
)

DEFAULT_TOL = 1e-9
DEGENERACY_TOL = 1e-9
MAX_COPY_SIDE = 64

KINDS = ("Unitary", "CptpLocal", "NcptpLocal", "CommutatorNecessary", "HessianNecessary")


@dataclass
class PassivityVerdict:
    kind: str
    passive: bool
    min_eig: float = float("nan")
    herm_defect: float = 0.0
    norm_residual: float = float("nan")
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown verdict kind {self.kind!r}")

    def to_dict(self) -> dict:
        """JSON-ready form; unset numeric fields become None."""

        def num(x):
            return None if np.isnan(x) else float(x)

        return {
            "kind": self.kind,
            "passive": bool(self.passive),
            "min_eig": num(self.min_eig),
            "herm_defect": num(self.herm_defect),
            "norm_residual": num(self.norm_residual),
            "details": self.details,
        }


# -- unitary passivity -------------------------------------------------------


def unitary_passive(rho: DensityMatrix, ham: Hamiltonian, tol: float = DEFAULT_TOL) -> PassivityVerdict:
    """Passive iff rho commutes with H and populations fall as energies rise.

    Energies closer than ``DEGENERACY_TOL`` form one level; inside a level
    the populations are unconstrained.
    """
    r = rho.matrix
    h = ham.matrix
    if r.shape != h.shape:
        raise DimensionError(f"state shape {r.shape} vs Hamiltonian shape {h.shape}")
    comm = float(np.linalg.norm(r @ h - h @ r))
    energies, vecs = np.linalg.eigh(h)

    # split the eigenbasis into degenerate levels
    levels: list[list[int]] = [[0]]
    for i in range(1, len(energies)):
        if energies[i] - energies[levels[-1][-1]] <= DEGENERACY_TOL:
            levels[-1].append(i)
        else:
            levels.append([i])

    r_eig = vecs.conj().T @ r @ vecs
    pops = [np.linalg.eigvalsh(0.5 * (r_eig[np.ix_(lv, lv)] + r_eig[np.ix_(lv, lv)].conj().T)) for lv in levels]
    worst = 0.0
    for lower, upper in zip(pops[:-1], pops[1:]):
        worst = max(worst, float(upper.max() - lower.min()))
    passive = comm <= tol and worst <= tol
    return PassivityVerdict(
        "Unitary",
        passive,
        min_eig=-worst,
        herm_defect=herm_defect(r),
        norm_residual=comm,
        details={"commutator_norm": comm, "max_order_violation": worst, "levels": len(levels)},
    )


# -- CPTP-local passivity ----------------------------------------------------


def build_c_local(b: BipartiteBattery) -> np.ndarray:
    """``Tr_B[(rho^{T_A} (x) I_A') (I_A (x) H_BA')]`` on A (x) A'.

    The product is formed on the ordering A, B, A' before B is traced out.
    """
    d_a, d_b = b.rho.dims
    h_ba = permute_subsystems(b.ham.matrix, (d_a, d_b), (1, 0))
    rho_ta = partial_transpose(b.rho.matrix, (d_a, d_b), 0)
    left = np.kron(rho_ta, np.eye(d_a))
    right = np.kron(np.eye(d_a), h_ba)
    return partial_trace(left @ right, (d_a, d_b, d_a), [0, 2])


def _phi_unnormalized(d: int) -> np.ndarray:
    v = np.eye(d).reshape(-1)
    return np.outer(v, v)


def cptp_local_passive(b: BipartiteBattery, tol: float = DEFAULT_TOL) -> PassivityVerdict:
    d_a = b.rho.dims[0]
    c = build_c_local(b)
    m = partial_trace(_phi_unnormalized(d_a) @ c, (d_a, d_a), [0])
    m_defect = herm_defect(m)
    gap = c - np.kron(m, np.eye(d_a))
    rep = psd_check(gap, tol)
    passive = m_defect <= tol * max(1.0, float(np.linalg.norm(m))) and rep.is_psd
    return PassivityVerdict(
        "CptpLocal",
        passive,
        min_eig=rep.min_eig,
        herm_defect=max(m_defect, rep.herm_defect),
        details={"c_min_eig": float(np.linalg.eigvalsh(0.5 * (c + c.conj().T))[0])},
    )


def tensor_copies(b: BipartiteBattery, n: int) -> BipartiteBattery:
    """n copies regrouped as (A1..An):(B1..Bn) with the summed Hamiltonian."""
    if n < 1:
        raise ValueError("n must be at least 1")
    d_a, d_b = b.rho.dims
    if (d_a * d_b) ** n > MAX_COPY_SIDE:
        raise ValueError(f"{n} copies exceed the side-length bound {MAX_COPY_SIDE}")
    if n == 1:
        return b
    dims = [d_a, d_b] * n
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    rho_n = kron_all([b.rho.matrix] * n)
    eye = np.eye(d_a * d_b)
    h_n = sum(kron_all([b.ham.matrix if k == j else eye for k in range(n)]) for j in range(n))
    new_dims = (d_a**n, d_b**n)
    rho_n = permute_subsystems(rho_n, dims, perm)
    h_n = permute_subsystems(h_n, dims, perm)
    return BipartiteBattery(DensityMatrix(rho_n, new_dims), Hamiltonian(h_n, new_dims, b.ham.unit))


# -- NCPTP-local passivity ---------------------------------------------------


def _check_tripartite(state: TripartiteState, ham: Hamiltonian):
    d_e, d_a, d_b = state.dims
    if tuple(ham.dims) != (d_a, d_b):
        raise DimensionError(f"Hamiltonian dims {ham.dims} do not match battery dims {(d_a, d_b)}")
    return d_e, d_a, d_b


def build_c_global(state: TripartiteState, ham: Hamiltonian) -> np.ndarray:
    """``<phi|_{B1B2} (I_E1 (x) H_A1B1 (x) rho^T_E2A2B2) |phi>_{B1B2}`` with ``|phi> = sum_j |jj>``.

    Factors are ordered E1 A1 B1 E2 A2 B2 before the contraction, which is an
    explicit double sum over the B1 = B2 labels of bra and ket.  For any
    U on E(x)A, ``<vec U|C|vec U>`` is the battery energy after U, with
    ``vec U = U.reshape(-1)``.
    """
    d_e, d_a, d_b = _check_tripartite(state, ham)
    n = d_e * d_a
    k = np.kron(np.eye(d_e), ham.matrix).reshape(n, d_b, n, d_b)
    rho_t = state.matrix.T.reshape(n, d_b, n, d_b)
    c = np.zeros((n * n, n * n), dtype=complex)
    for j in range(d_b):
        for jp in range(d_b):
            c += np.kron(k[:, j, :, jp], rho_t[:, j, :, jp])
    return c


def build_c_prime(c, block_dim: int, *, literal: bool = True) -> np.ndarray:
    """``<a b|C'|a' b'> = delta_{a a'} M_{b b'}``.

    With ``literal`` the multiplier is ``M_{b b'} = sum_i <ii|C|b' b>``.
    Otherwise it is ``sum_i <b' b|C|ii>``, the Lagrange multiplier of the
    unitarity constraint at the identity; the two are complex conjugates of
    each other and coincide for real C.
    """
    c = np.asarray(c)
    n = int(block_dim)
    if c.shape != (n * n, n * n):
        raise DimensionError(f"C of shape {c.shape} does not match block_dim {n}")
    c4 = c.reshape(n, n, n, n)
    if literal:
        m = np.einsum("iicb->bc", c4)
    else:
        m = np.einsum("cbii->bc", c4)
    return np.kron(np.eye(n), m)


def _y_block(c: np.ndarray, n: int) -> np.ndarray:
    """Off-diagonal block of the Lagrangian Hessian; it must vanish at a minimum."""
    diff = c.conj() - c
    return 1j * (diff - build_c_prime(diff, n, literal=True))


def ncptp_local_passive(state: TripartiteState, ham: Hamiltonian, tol: float = DEFAULT_TOL) -> PassivityVerdict:
    """Passive iff ``C - C'`` is PSD within ``tol``.

    C' uses the stationarity multiplier (see :func:`build_c_prime`); the
    literal index order and the norm of the Y block are reported alongside.
    """
    d_e, d_a, _ = _check_tripartite(state, ham)
    n = d_e * d_a
    c = build_c_global(state, ham)
    gap = c - build_c_prime(c, n, literal=False)
    rep = psd_check(gap, tol)
    literal_gap = c - build_c_prime(c, n, literal=True)
    literal_min = float(np.linalg.eigvalsh(0.5 * (literal_gap + literal_gap.conj().T))[0])
    return PassivityVerdict(
        "NcptpLocal",
        rep.is_psd,
        min_eig=rep.min_eig,
        herm_defect=rep.herm_defect,
        details={
            "c_herm_defect": herm_defect(c),
            "literal_min_eig": literal_min,
            "y_norm": float(np.linalg.norm(_y_block(c, n))),
        },
    )


# -- necessary conditions ----------------------------------------------------


def commutator_check(state: TripartiteState, ham: Hamiltonian, tol: float = 1e-6) -> PassivityVerdict:
    """``|| Tr_B [rho_EAB, I_E (x) H_AB] ||_F``; zero is necessary for passivity."""
    d_e, d_a, d_b = _check_tripartite(state, ham)
    big = np.kron(np.eye(d_e), ham.matrix)
    comm = state.matrix @ big - big @ state.matrix
    res = float(np.linalg.norm(partial_trace(comm, (d_e, d_a, d_b), [0, 1])))
    return PassivityVerdict("CommutatorNecessary", res <= tol, norm_residual=res)


def block_energy(v, state: TripartiteState, ham: Hamiltonian) -> float:
    """Battery energy after the block unitary with parameters (phi1, phi2, theta1, chi1, theta2, chi2)."""
    d_e, d_a, d_b = state.dims
    u = np.kron(block_unitary_from_vector(v), np.eye(d_b))
    out = u @ state.matrix @ u.conj().T
    return float(np.trace(out @ np.kron(np.eye(d_e), ham.matrix)).real)


def _hessian_entries(a, b, off: int) -> dict[str, complex]:
    # a: rho, b: H; the formulas use 1-based labels and i, j in {1, 2},
    # and the second block reads the state with all labels shifted by 4
    def A(r, s):
        return a[r - 1 + off, s - 1 + off]

    def B(r, s):
        return b[r - 1, s - 1]

    def x(i, j):
        return (
            (A(i, i) - A(i + 2, i + 2)) * (B(j, j) - B(j + 2, j + 2))
            + (A(i, i + 2) + A(i + 2, i)) * (B(j, j + 2) + B(j + 2, j))
            + (A(3 - i, 2 + i) + A(5 - i, i)) * (B(j, 5 - j) + B(2 + j, 3 - j))
            + (A(3 - i, i) - A(5 - i, 2 + i)) * (B(j, 3 - j) - B(2 + j, 5 - j))
        )

    def y(i, j):
        return (
            (A(i, i) - A(i + 2, i + 2)) * (B(j, j + 2) - B(j + 2, j))
            + (A(i, i + 2) - A(i + 2, i)) * (B(j, j) - B(j + 2, j + 2))
            + (A(3 - i, 2 + i) - A(5 - i, i)) * (B(j, 3 - j) - B(2 + j, 5 - j))
            + (A(3 - i, i) - A(5 - i, 2 + i)) * (B(j, 5 - j) - B(2 + j, 3 - j))
        )

    def z(i, j):
        return (
            (A(i, i) - A(i + 2, i + 2)) * (B(j, j + 2) - B(j + 2, j))
            - (A(i, i + 2) - A(i + 2, i)) * (B(j, j) - B(j + 2, j + 2))
            - (A(3 - i, 2 + i) - A(5 - i, i)) * (B(j, 3 - j) - B(2 + j, 5 - j))
            + (A(3 - i, i) - A(5 - i, 2 + i)) * (B(j, 5 - j) - B(2 + j, 3 - j))
        )

    def h(i, j):
        return (A(i + 2, i) * B(j, j + 2) + A(i, i + 2) * B(j + 2, j)) + (
            A(2 + i, 3 - i) * B(3 - j, 2 + j) + A(i, 5 - i) * B(5 - j, j)
        )

    return {
        "x": -2 * sum(x(i, i) for i in (1, 2)),
        "y": 1j * sum(y(i, i) for i in (1, 2)),
        "z": 1j * sum(z(i, i) for i in (1, 2)),
        "h": -4 * sum(h(i, i) for i in (1, 2)),
    }


def hessian_matrix(state: TripartiteState, ham: Hamiltonian) -> np.ndarray:
    """Complex 6x6 Hessian of :func:`block_energy` at the identity, from the closed-form entries."""
    if tuple(state.dims) != (2, 2, 2):
        raise DimensionError(f"the closed-form Hessian needs dims (2, 2, 2), got {state.dims}")
    _check_tripartite(state, ham)
    one = _hessian_entries(state.matrix, ham.matrix, 0)
    two = _hessian_entries(state.matrix, ham.matrix, 4)
    a, b, c, h = one["x"], one["y"], one["z"], one["h"]
    d, e, f, k = two["x"], two["y"], two["z"], two["h"]
    return np.array(
        [
            [a, 0, b, c, 0, 0],
            [0, d, 0, 0, e, f],
            [b, 0, h, 0, 0, 0],
            [c, 0, 0, 0, 0, 0],
            [0, e, 0, 0, k, 0],
            [0, f, 0, 0, 0, 0],
        ],
        dtype=complex,
    )


def hessian_check(state: TripartiteState, ham: Hamiltonian, tol: float = 1e-9) -> tuple[np.ndarray, PassivityVerdict]:
    """Real 6x6 Hessian and a necessary-condition verdict.

    The chi rows carry a structurally zero diagonal, so the matrix is never
    strictly positive definite; the verdict asks for PSD within ``tol`` and
    reports strict definiteness separately.
    """
    full = hessian_matrix(state, ham)
    imag = float(np.abs(full.imag).max())
    m = full.real
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    verdict = PassivityVerdict(
        "HessianNecessary",
        bool(eig[0] >= -tol),
        min_eig=float(eig[0]),
        herm_defect=float(np.linalg.norm(m - m.T)),
        details={"imag_residue": imag, "positive_definite": bool(eig[0] > tol)},
    )
    return m, verdict
