"""Dense operator kernel for small multipartite systems.

Index convention used everywhere in the package: subsystem 0 is the
leftmost tensor factor, i.e. the slowest-varying index of a flattened basis
label.  For dims ``[d0, d1, d2]`` the basis state ``|i0 i1 i2>`` has position
``(i0 * d1 + i1) * d2 + i2``.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

HERM_TOL = 1e-9
PSD_TOL = 1e-9


class DimensionError(ValueError):
    """Subsystem dimensions do not fit the operator they are attached to."""


class HermiticityError(ValueError):
    """An operator that must be Hermitian is not, within tolerance."""


class PSDReport(NamedTuple):
    is_psd: bool
    min_eig: float
    herm_defect: float


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in dims]
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not multiply to side length {m.shape[0]}")
    return dims


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(ops: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems stay in their original relative order.  Passing an
    empty ``keep`` returns the full trace as a 1x1 matrix.
    """
    m = np.asarray(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems")
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    t = np.einsum("".join(row) + "".join(col) + "->" + out, m.reshape(dims + dims))
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def partial_transpose(m, dims: Sequence[int], which: int | Iterable[int]) -> np.ndarray:
    m = np.asarray(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    which = [which] if np.isscalar(which) else list(which)
    axes = list(range(2 * n))
    for w in which:
        w = int(w)
        if not 0 <= w < n:
            raise DimensionError(f"subsystem index {w} out of range for {n} subsystems")
        axes[w], axes[w + n] = axes[w + n], axes[w]
    return m.reshape(dims + dims).transpose(axes).reshape(m.shape)


def permute_subsystems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new subsystem ``k`` is old subsystem ``perm[k]``."""
    m = np.asarray(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise DimensionError(f"{perm} is not a permutation of {n} subsystems")
    axes = perm + [p + n for p in perm]
    return m.reshape(dims + dims).transpose(axes).reshape(m.shape)


def permute_ket(v, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    v = np.asarray(v)
    return v.reshape([int(d) for d in dims]).transpose(list(perm)).reshape(-1)


def herm_defect(m) -> float:
    m = np.asarray(m)
    return float(np.linalg.norm(m - m.conj().T))


def eig_hermitian(m, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns).

    Raises HermiticityError when ``||m - m^dag||_F > tol * max(1, ||m||_F)``.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.linalg.norm(m)))
    if herm_defect(m) > tol * scale:
        raise HermiticityError(f"matrix is not Hermitian (defect {herm_defect(m):.3e})")
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def psd_check(m, tol: float = PSD_TOL) -> PSDReport:
    """Report PSD status instead of raising.

    ``min_eig`` is the smallest eigenvalue of the Hermitian part.
    """
    m = np.asarray(m)
    norm = float(np.linalg.norm(m))
    defect = herm_defect(m)
    min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    ok = defect <= tol * norm and min_eig >= -tol * max(1.0, norm)
    return PSDReport(bool(ok), min_eig, defect)


def is_unitary(u, tol: float = 1e-9) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))) <= tol


def von_neumann_entropy(rho, base: float = 2.0, cutoff: float = 1e-15) -> float:
    w = np.linalg.eigvalsh(0.5 * (np.asarray(rho) + np.asarray(rho).conj().T))
    w = w[w > cutoff]
    return float(-np.sum(w * np.log(w)) / np.log(base))
