"""Separation of variables: momenta, kernel, and holonomy reality tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .monodromy import MonodromyRep, PathSpec, transport
from .oper import Oper
from .quantiser import HolonomyKind

EPS = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class SOVPoint:
    u0: complex
    u: tuple[complex, ...]
    z: tuple[complex, ...]


def _check_distinct(z):
    for i in range(len(z)):
        for j in range(i):
            if z[i] == z[j]:
                raise ValidationError(f"coincident positions z[{j}] = z[{i}] = {z[i]}")


def sov_momenta(z: Sequence[complex], u0: complex, u: Sequence[complex]) -> np.ndarray:
    """``p_r = u0 prod_k (z_r - u_k) / prod_{s != r} (z_r - z_s)``."""
    z = np.asarray(z, dtype=complex)
    u = np.asarray(u, dtype=complex)
    _check_distinct(z)
    out = np.empty(len(z), dtype=complex)
    for r in range(len(z)):
        others = np.delete(z, r)
        out[r] = u0 * np.prod(z[r] - u) / np.prod(z[r] - others)
    return out


def scaling_weight(j: Sequence[complex], j_last: complex) -> complex:
    """Dilatation weight ``J`` of the kernel: ``-j_n + sum_{r<n} j_r``, where
    ``j_last`` belongs to the puncture not among the separated positions."""
    return complex(sum(complex(x) for x in j) - complex(j_last))


def _log_abs(x, what):
    a = abs(x)
    if a == 0:
        raise ValidationError(f"singular factor: {what} vanishes")
    return math.log(a)


def sov_kernel(x: Sequence[complex], u: Sequence[complex], z: Sequence[complex],
               j: Sequence[complex], J: complex) -> float:
    """Unnormalised kernel, accumulated as a log-magnitude.

    Zero bases are allowed only under nonnegative real exponents.
    """
    x = np.asarray(x, dtype=complex)
    u = np.asarray(u, dtype=complex)
    z = np.asarray(z, dtype=complex)
    j = np.asarray(j, dtype=complex)
    if len(x) != len(z) or len(j) != len(z):
        raise ValidationError("x, z and j must have matching lengths")
    _check_distinct(z)
    log_val = 0.0
    num = np.array([np.prod(z[r] - u) for r in range(len(z))])
    den = np.array([np.prod(z[r] - np.delete(z, r)) for r in range(len(z))])

    def add(base, expo, what):
        nonlocal log_val
        expo = complex(expo)
        if expo == 0:
            return True
        if base == 0:
            if expo.real > 0:
                return False
            raise ValidationError(f"singular factor: {what} vanishes under exponent {expo}")
        # |b|^(2 w) for complex w is |b|^(2 Re w) in magnitude
        log_val += 2 * expo.real * _log_abs(base, what)
        return True

    if not add(complex(np.sum(x * num / den)), J, "sum_r x_r p_r"):
        return 0.0
    for r in range(len(z)):
        if num[r] == 0:
            if (j[r] + 1).real < 0:
                return 0.0
            raise ValidationError(f"singular factor: prod_k (z_{r} - u_k) vanishes")
        if not add(den[r] / num[r], j[r] + 1, f"ratio at z_{r}"):
            return 0.0
    for k in range(len(u)):
        for l in range(k + 1, len(u)):
            if not add(u[k] - u[l], 1, f"u_{k} - u_{l}"):
                return 0.0
    return math.exp(log_val)


@dataclass(frozen=True)
class HolonomyClass:
    kind: HolonomyKind
    form: np.ndarray | None
    signature: tuple[int, int] | None
    null_dim: int


def _hermitian_basis():
    b = [np.array([[1, 0], [0, 0]], dtype=complex),
         np.array([[0, 0], [0, 1]], dtype=complex),
         np.array([[0, 1], [1, 0]], dtype=complex),
         np.array([[0, 1j], [-1j, 0]], dtype=complex)]
    return b


def hermitian_system(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Real linear map ``h -> (M^dag H M - H)`` stacked over matrices, in the
    basis of :func:`_hermitian_basis`."""
    basis = _hermitian_basis()
    rows = []
    for m in matrices:
        cols = []
        for b in basis:
            d = m.conj().T @ b @ m - b
            cols.append(np.concatenate([d.real.ravel(), d.imag.ravel()]))
        rows.append(np.array(cols).T)
    return np.vstack(rows)


def invariant_hermitian_form(rep: MonodromyRep | Sequence[np.ndarray],
                             rel_tol: float = 1e-8) -> HolonomyClass:
    """Classify by the space of Hermitian ``H`` with ``M^dag H M = H``.

    Singular values are compared to the largest one times ``rel_tol`` (scaled
    by the matrix norms, since entries can be large).
    """
    mats = rep.matrices if isinstance(rep, MonodromyRep) else tuple(rep)
    a = hermitian_system(mats)
    scale = max(1.0, max(float(np.abs(m).max()) ** 2 for m in mats))
    _, s, vt = np.linalg.svd(a)
    s_full = np.concatenate([s, np.zeros(4 - len(s))])
    null = vt[s_full <= rel_tol * scale]
    dim = len(null)
    if dim == 0:
        return HolonomyClass(HolonomyKind.NONE, None, None, 0)
    if dim > 1:
        return HolonomyClass(HolonomyKind.REDUCIBLE, None, None, dim)
    c = null[0]
    h = sum(ci * b for ci, b in zip(c, _hermitian_basis()))
    ev = np.linalg.eigvalsh(h)
    tol = 1e-10 * float(np.abs(ev).max())
    pos = int((ev > tol).sum())
    neg = int((ev < -tol).sum())
    if pos == 1 and neg == 1:
        kind = HolonomyKind.SL2R
    elif pos == 2 or neg == 2:
        kind = HolonomyKind.SU2
        if neg == 2:
            h = -h
            pos, neg = 2, 0
    else:
        kind = HolonomyKind.REDUCIBLE
    return HolonomyClass(kind, h, (pos, neg), 1)


def real_basis(form: np.ndarray) -> np.ndarray:
    """``g`` with ``g^dag H g`` proportional to ``i eps``.

    In that basis matrices preserving ``H`` are real up to a common sign.
    """
    w, v = np.linalg.eigh(form)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    if not (w[0] > 0 > w[1]):
        raise ValidationError("form is not indefinite")
    # v diagonalises H to diag(w0, w1); rescale to diag(1, -1), then rotate
    d = v @ np.diag([1 / math.sqrt(w[0]), 1 / math.sqrt(-w[1])])
    rot = np.array([[1, 1j], [1, -1j]], dtype=complex) / math.sqrt(2)
    return d @ rot


def single_valuedness_residual(m: np.ndarray, c: np.ndarray = EPS) -> float:
    """``|| M^dag C M - C ||`` (max-entry norm)."""
    m = np.asarray(m, dtype=complex)
    return float(np.abs(m.conj().T @ c @ m - c).max())


def loop_residual(oper: Oper, loop: PathSpec, c: np.ndarray = EPS,
                  basis: np.ndarray | None = None, **opts) -> float:
    """Residual for the loop's monodromy, expressed in the given solution basis.

    The columns of ``basis`` are the initial data of ``chi_1, chi_2`` at the
    base point.  The monodromy acting on them is ``basis^-1 T basis``.
    """
    t = transport(oper, loop, **opts).entries
    if basis is not None:
        t = np.linalg.solve(basis, t @ basis)
    return single_valuedness_residual(t, c)


def rep_residuals(rep: MonodromyRep, c: np.ndarray = EPS) -> list[float]:
    """Per-loop residuals in the real basis of the rep's invariant form.

    Falls back to the transport basis if no indefinite form exists.
    """
    cls = invariant_hermitian_form(rep)
    if cls.kind is HolonomyKind.SL2R:
        g = real_basis(cls.form)
        mats = rep.conjugated(g).matrices
    else:
        mats = rep.matrices
    return [single_valuedness_residual(m, c) for m in mats]
