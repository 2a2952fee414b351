"""Alternating multilinear forms on a 7-dimensional real vector space.

A k-form is stored by its components on sorted index tuples
``i1 < ... < ik`` in lexicographic order, the convention being
``alpha = sum_I alpha_I theta^I``.  A dense fully antisymmetric tensor is
derived on demand for evaluation and pullback.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from math import comb

import numpy as np

DIM = 7


@lru_cache(maxsize=None)
def index_tuples(k: int, n: int = DIM) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def _position(k: int, n: int = DIM) -> dict[tuple[int, ...], int]:
    return {idx: pos for pos, idx in enumerate(index_tuples(k, n))}


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        while seq[i] != i:
            j = seq[i]
            seq[i], seq[j] = seq[j], seq[i]
            sign = -sign
    return sign


def sort_with_sign(idx) -> tuple[int, tuple[int, ...]]:
    """Return ``(sign, sorted_idx)``; sign is 0 if an index repeats."""
    idx = tuple(idx)
    if len(set(idx)) < len(idx):
        return 0, idx
    order = sorted(range(len(idx)), key=lambda m: idx[m])
    return _perm_sign(order), tuple(idx[m] for m in order)


@lru_cache(maxsize=None)
def _dense_scatter(k: int, n: int = DIM):
    # (flat dense positions, component index, sign) for every permutation
    flat, comp, sign = [], [], []
    shape = (n,) * k
    for pos, idx in enumerate(index_tuples(k, n)):
        for perm in permutations(range(k)):
            flat.append(np.ravel_multi_index(tuple(idx[p] for p in perm), shape))
            comp.append(pos)
            sign.append(_perm_sign(perm))
    return np.array(flat), np.array(comp), np.array(sign, dtype=float)


@lru_cache(maxsize=None)
def _wedge_table(k: int, m: int, n: int = DIM):
    rows = []
    pos = _position(k + m, n)
    for i, a in enumerate(index_tuples(k, n)):
        for j, b in enumerate(index_tuples(m, n)):
            sign, idx = sort_with_sign(a + b)
            if sign:
                rows.append((i, j, pos[idx], sign))
    return np.array(rows, dtype=int).reshape(-1, 4)


@lru_cache(maxsize=None)
def _complement_table(k: int, n: int = DIM):
    # for each sorted I: position of its complement J and sign of (I, J)
    pos = _position(n - k, n)
    out = []
    for idx in index_tuples(k, n):
        rest = tuple(i for i in range(n) if i not in idx)
        out.append((pos[rest], _perm_sign(idx + rest)))
    return np.array(out, dtype=int).reshape(-1, 2)


class AltForm:
    """A k-form on ``R^n`` (default ``n = 7``) in the canonical index storage."""

    __slots__ = ("degree", "dim", "comps", "_dense")

    def __init__(self, degree: int, comps=None, dim: int = DIM):
        if not 0 <= degree <= dim:
            raise ValueError(f"degree {degree} out of range for dimension {dim}")
        size = comb(dim, degree)
        if comps is None:
            comps = np.zeros(size)
        comps = np.array(comps, dtype=float).reshape(-1)
        if comps.shape != (size,):
            raise ValueError(f"expected {size} components, got {comps.shape[0]}")
        self.degree = degree
        self.dim = dim
        self.comps = comps
        self._dense = None

    @classmethod
    def from_terms(cls, degree: int, terms: dict, dim: int = DIM) -> "AltForm":
        """Build from ``{(i, j, ...): coeff}`` with arbitrary index order (0-based)."""
        form = cls(degree, dim=dim)
        pos = _position(degree, dim)
        for idx, coeff in terms.items():
            if len(idx) != degree:
                raise ValueError(f"index {idx} does not have length {degree}")
            sign, key = sort_with_sign(idx)
            if sign:
                form.comps[pos[key]] += sign * coeff
        return form

    @property
    def indices(self):
        return index_tuples(self.degree, self.dim)

    def component(self, *idx) -> float:
        sign, key = sort_with_sign(idx)
        if not sign:
            return 0.0
        return sign * self.comps[_position(self.degree, self.dim)[key]]

    def dense(self) -> np.ndarray:
        if self._dense is None:
            k, n = self.degree, self.dim
            flat, comp, sign = _dense_scatter(k, n)
            out = np.zeros(n**k)
            out[flat] = sign * self.comps[comp]
            self._dense = out.reshape((n,) * k)
        return self._dense

    @classmethod
    def from_dense(cls, tensor: np.ndarray) -> "AltForm":
        k = tensor.ndim
        n = tensor.shape[0] if k else DIM
        idx = index_tuples(k, n)
        if k == 0:
            return cls(0, [float(tensor)], dim=n)
        comps = tensor[tuple(np.array(idx).T)]
        return cls(k, comps, dim=n)

    def __call__(self, *vectors) -> float:
        if len(vectors) != self.degree:
            raise ValueError(f"{self.degree}-form evaluated on {len(vectors)} vectors")
        out = self.dense()
        for v in vectors:
            out = np.tensordot(np.asarray(v, dtype=float), out, axes=(0, 0))
        return float(out)

    def wedge(self, other: "AltForm") -> "AltForm":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        k, m = self.degree, other.degree
        if k + m > self.dim:
            raise ValueError(f"degree {k + m} exceeds dimension {self.dim}")
        table = _wedge_table(k, m, self.dim)
        out = np.zeros(comb(self.dim, k + m))
        if table.size:
            np.add.at(out, table[:, 2], table[:, 3] * self.comps[table[:, 0]] * other.comps[table[:, 1]])
        return AltForm(k + m, out, self.dim)

    __xor__ = wedge

    def interior(self, v) -> "AltForm":
        """Contraction ``i(v) alpha`` in the first slot."""
        if self.degree == 0:
            raise ValueError("cannot contract a 0-form")
        t = np.tensordot(np.asarray(v, dtype=float), self.dense(), axes=(0, 0))
        return AltForm.from_dense(np.asarray(t))

    def pullback(self, mat: np.ndarray) -> "AltForm":
        """Components after the substitution ``theta^a = sum_mu mat[a, mu] dy^mu``."""
        mat = np.asarray(mat, dtype=float)
        t = self.dense()
        for _ in range(self.degree):
            # contract the leading slot, the new index goes to the back
            t = np.tensordot(t, mat, axes=(0, 0))
        return AltForm.from_dense(t) if self.degree else AltForm(0, self.comps, mat.shape[1])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.comps))) if self.comps.size else 0.0

    def __add__(self, other: "AltForm") -> "AltForm":
        self._check(other)
        return AltForm(self.degree, self.comps + other.comps, self.dim)

    def __sub__(self, other: "AltForm") -> "AltForm":
        self._check(other)
        return AltForm(self.degree, self.comps - other.comps, self.dim)

    def __neg__(self) -> "AltForm":
        return AltForm(self.degree, -self.comps, self.dim)

    def __mul__(self, scalar: float) -> "AltForm":
        return AltForm(self.degree, float(scalar) * self.comps, self.dim)

    __rmul__ = __mul__

    def _check(self, other):
        if (self.degree, self.dim) != (other.degree, other.dim):
            raise ValueError("degree or dimension mismatch")

    def __repr__(self) -> str:
        nz = {idx: c for idx, c in zip(self.indices, self.comps) if abs(c) > 0}
        return f"AltForm({self.degree}, {nz})"


def _minor_matrix(mat: np.ndarray, k: int) -> np.ndarray:
    """Induced matrix on k-vectors: all k x k minors ``det(mat[I, J])``."""
    n = mat.shape[0]
    if k == 0:
        return np.ones((1, 1))
    idx = np.array(index_tuples(k, n))
    sub = mat[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub)


def hodge_star(form: AltForm, metric: np.ndarray) -> AltForm:
    """Hodge star for ``metric`` (Gram matrix on the frame), frame orientation."""
    metric = np.asarray(metric, dtype=float)
    n, k = form.dim, form.degree
    if metric.shape != (n, n):
        raise ValueError("metric shape does not match the form dimension")
    det = np.linalg.det(metric)
    if det <= 0:
        raise ValueError("metric is not positive definite")
    if not np.any(metric - np.diag(np.diag(metric))):
        diag = np.diag(metric)
        raised = form.comps / np.array([np.prod(diag[list(i)]) for i in form.indices])
    else:
        raised = _minor_matrix(np.linalg.inv(metric), k) @ form.comps
    table = _complement_table(k, n)
    out = np.zeros(comb(n, n - k))
    out[table[:, 0]] = np.sqrt(det) * table[:, 1] * raised
    return AltForm(n - k, out, n)
