"""Dense complex linear algebra for small composite Hilbert spaces.

Matrices are plain ``numpy`` ``complex128`` arrays; kets are 1-d arrays.
Composite spaces are described by a *dim list*: the ordered subsystem
dimensions, leftmost factor most significant in the basis index, so that
``|0 1>`` in a two-qubit space sits at index 1.
"""
from functools import reduce
from math import prod

import numpy as np

from .errors import ContractError, DimensionError, DimensionLimitError

MAX_DIM = 4096
TOL = 1e-9


def cmatrix(data):
    """Return ``data`` as a finite complex128 array (1-d or 2-d)."""
    arr = np.asarray(data, dtype=np.complex128)
    if arr.ndim not in (1, 2) or arr.size == 0:
        raise DimensionError(f"expected a nonempty vector or matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("matrix entries must be finite")
    return arr


def frozen(arr):
    """Read-only copy of ``arr`` as complex128."""
    out = np.array(arr, dtype=np.complex128)
    out.setflags(write=False)
    return out


def check_dims(dims):
    """Validate a dim list and return it as a tuple of ints."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimensionError("dim list must be nonempty")
    if any(d < 2 for d in dims):
        raise DimensionError(f"subsystem dimensions must be >= 2, got {dims}")
    if prod(dims) > MAX_DIM:
        raise DimensionLimitError(f"total dimension {prod(dims)} exceeds cap {MAX_DIM}")
    return dims


def _check_square(m, name="matrix"):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def tensor(*ops):
    """Kronecker product of vectors or matrices, left to right."""
    if not ops:
        raise DimensionError("tensor needs at least one operand")
    ops = [cmatrix(op) for op in ops]
    if len({op.ndim for op in ops}) != 1:
        raise DimensionError("cannot tensor vectors with matrices")
    shape = tuple(prod(s) for s in zip(*(op.shape for op in ops)))
    if max(shape) > MAX_DIM:
        raise DimensionLimitError(f"tensor product shape {shape} exceeds cap {MAX_DIM}")
    return reduce(np.kron, ops)


def matmul(a, b):
    a, b = cmatrix(a), cmatrix(b)
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def adjoint(m):
    m = cmatrix(m)
    return m.conj().T if m.ndim == 2 else m.conj()


def trace(m):
    m = cmatrix(m)
    _check_square(m)
    return complex(np.trace(m))


def add(a, b):
    a, b = cmatrix(a), cmatrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot add shapes {a.shape} and {b.shape}")
    return a + b


def scale(m, c):
    return complex(c) * cmatrix(m)


def commutator(a, b):
    return matmul(a, b) - matmul(b, a)


def op_norm(m):
    """Spectral norm (largest singular value)."""
    m = cmatrix(m)
    if m.ndim == 1:
        return float(np.linalg.norm(m))
    return float(np.linalg.norm(m, 2))


def is_hermitian(m, tol=TOL):
    m = cmatrix(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=tol)


def is_unitary(m, tol=TOL):
    m = cmatrix(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), rtol=0, atol=tol)


def is_projector(m, tol=TOL):
    m = cmatrix(m)
    return is_hermitian(m, tol) and np.allclose(m @ m, m, rtol=0, atol=tol)


def ket_projector(v):
    """``|v><v|`` for a (not necessarily normalized) ket."""
    v = cmatrix(v)
    if v.ndim != 1:
        raise DimensionError("ket_projector expects a vector")
    return np.outer(v, v.conj())


def partial_trace(m, dims, keep):
    """Trace out every factor of ``m`` whose index is not in ``keep``.

    The kept factors stay in their original relative order. ``m`` may be a
    density matrix or a ket (treated as ``|m><m|``).
    """
    dims = check_dims(dims)
    m = cmatrix(m)
    if m.ndim == 1:
        m = ket_projector(m)
    _check_square(m)
    if m.shape[0] != prod(dims):
        raise DimensionError(f"matrix dimension {m.shape[0]} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = m.reshape(dims + dims)
    # einsum subscripts: row index i, column index i+n; traced factors share a letter
    row = list(range(n))
    col = [i if i not in keep else i + n for i in range(n)]
    out = [i for i in keep] + [i + n for i in keep]
    kd = prod(dims[k] for k in keep) if keep else 1
    return np.einsum(t, row + col, out).reshape(kd, kd)


def eig_hermitian(m, tol=TOL):
    """Spectral decomposition of a Hermitian matrix into eigenspace projectors.

    Returns a list of ``(eigenvalue, projector)`` with ascending eigenvalues.
    Eigenvalues closer than ``tol`` to their neighbour are merged into one
    eigenspace, so degenerate spectra give basis-independent output.
    """
    m = cmatrix(m)
    _check_square(m)
    if not is_hermitian(m, tol):
        raise ContractError("eig_hermitian requires a Hermitian matrix")
    h = (m + m.conj().T) / 2
    vals, vecs = np.linalg.eigh(h)
    groups = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    out = []
    for g in groups:
        v = vecs[:, g]
        out.append((float(np.mean(vals[g])), v @ v.conj().T))
    return out
