"""Truncated Taylor polynomials (jets) in n variables.

A jet of order N stores the coefficients of a polynomial modulo terms of
degree > N, i.e. an element of the quotient P_N = C^inf / m^(N+1) where m
is the ideal of functions vanishing at the base point.  Coefficients are
Taylor-normalized: the coefficient stored for the multi-index ``alpha`` is
``D^alpha u(0) / alpha!``, so a jet literally lists monomial coefficients.

Monomials are ordered graded-lexicographically: ascending total degree,
and within a degree the variable with the smallest index dominates.  For
two variables through degree 2 the basis reads

    1, y1, y2, y1^2, y1*y2, y2^2

Values may be scalars, vectors (length m) or square matrices (m x m);
the coefficient array has shape ``(P_dim(n, N), *value_shape)``.  Jets are
immutable: every operation returns a new jet and the coefficient buffer is
marked read-only.

The scalar field is carried by the coefficient dtype (float64 or
complex128).  Mixing fields raises ``FieldMismatchError``; promote a real
jet explicitly with :meth:`Jet.to_complex`.

>>> y1 = Jet.coordinate(2, 2, 0)
>>> y2 = Jet.coordinate(2, 2, 1)
>>> (y1 * y2).coefficient((1, 1))
1.0
>>> u = Jet.from_terms(2, 2, {(0, 0): 1.0, (1, 0): 1.0})   # 1 + y1
>>> v = Jet.from_terms(2, 2, {(0, 0): 1.0, (1, 0): -1.0})  # 1 - y1
>>> (u * v) == Jet.from_terms(2, 2, {(0, 0): 1.0, (2, 0): -1.0})
True

Truncation is exact quotient arithmetic: multiplying representatives and
truncating equals multiplying in P_N, and directional derivatives along a
vector field with no constant term descend to P_N as well.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import FieldMismatchError, ShapeMismatchError

__all__ = [
    "P_dim",
    "H_dim",
    "monomials",
    "monomial_rank",
    "monomial_powers",
    "degree_starts",
    "grlex_key",
    "Jet",
    "VectorFieldJet",
    "jet_mul",
    "jet_directional_derivative",
    "jet_project",
    "jet_to_json",
    "jet_from_json",
]


def P_dim(n: int, N: int) -> int:
    """Dimension of the space of polynomials of degree <= N in n variables."""
    return math.comb(n + N, n)


def H_dim(n: int, k: int) -> int:
    """Dimension of the space of homogeneous polynomials of degree k."""
    return math.comb(n + k - 1, k) if k >= 0 else 0


def grlex_key(alpha):
    """Sort key realizing the graded-lexicographic order on multi-indices."""
    return (sum(alpha), tuple(-a for a in alpha))


def _compositions(total: int, parts: int):
    """Weak compositions of `total` into `parts` slots, first slot largest first."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


@lru_cache(maxsize=None)
def monomials(n: int, N: int) -> tuple:
    """All multi-indices with |alpha| <= N in graded-lex order."""
    if n < 1 or N < 0:
        raise ValueError(f"need n >= 1 and N >= 0, got n={n}, N={N}")
    out = []
    for degree in range(N + 1):
        out.extend(_compositions(degree, n))
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_rank(n: int, N: int) -> dict:
    """Map multi-index -> position in the graded-lex basis."""
    return {alpha: i for i, alpha in enumerate(monomials(n, N))}


@lru_cache(maxsize=None)
def monomial_powers(n: int, N: int) -> np.ndarray:
    """Exponent matrix, shape (P_dim, n); row i is the i-th multi-index."""
    E = np.array(monomials(n, N), dtype=np.int64).reshape(P_dim(n, N), n)
    E.setflags(write=False)
    return E


@lru_cache(maxsize=None)
def degree_starts(n: int, N: int) -> np.ndarray:
    """Offsets of each degree block; entry k is the rank of the first degree-k monomial."""
    starts = np.zeros(N + 2, dtype=np.int64)
    for k in range(N + 2):
        starts[k] = P_dim(n, k - 1) if k >= 1 else 0
    starts.setflags(write=False)
    return starts


@lru_cache(maxsize=None)
def _mul_table(n: int, N: int):
    """Index triples (i, j, k) with monomial_i * monomial_j = monomial_k, degrees <= N."""
    mons = monomials(n, N)
    rank = monomial_rank(n, N)
    ii, jj, kk = [], [], []
    for i, a in enumerate(mons):
        da = sum(a)
        for j, b in enumerate(mons):
            if da + sum(b) > N:
                continue
            ii.append(i)
            jj.append(j)
            kk.append(rank[tuple(x + y for x, y in zip(a, b))])
    return (np.array(ii, dtype=np.intp), np.array(jj, dtype=np.intp),
            np.array(kk, dtype=np.intp))


@lru_cache(maxsize=None)
def _diff_table(n: int, N: int, i: int):
    """Index pairs and factors for d/dy_i: src rank, dst rank (order N-1), factor alpha_i."""
    rank_lo = monomial_rank(n, N - 1) if N >= 1 else {}
    src, dst, fac = [], [], []
    for r, alpha in enumerate(monomials(n, N)):
        if alpha[i] == 0:
            continue
        beta = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
        if sum(beta) > N - 1:
            continue
        src.append(r)
        dst.append(rank_lo[beta])
        fac.append(alpha[i])
    return (np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp),
            np.array(fac, dtype=np.float64))


def _as_value_shape(shape) -> tuple:
    if shape in ((), "scalar", None):
        return ()
    if isinstance(shape, tuple):
        if len(shape) in (1, 2):
            return shape
        raise ShapeMismatchError(f"unsupported value shape {shape!r}")
    raise ShapeMismatchError(f"unsupported value shape {shape!r}")


class Jet:
    """Immutable order-N Taylor polynomial with scalar, vector or matrix values."""

    __slots__ = ("n", "N", "_coeffs")

    def __init__(self, n: int, N: int, coeffs: np.ndarray, *, copy: bool = True):
        coeffs = np.array(coeffs, copy=copy)
        if coeffs.dtype not in (np.float64, np.complex128):
            coeffs = coeffs.astype(np.float64 if not np.iscomplexobj(coeffs)
                                   else np.complex128)
        if coeffs.shape[0] != P_dim(n, N):
            raise ShapeMismatchError(
                f"coefficient array has {coeffs.shape[0]} rows, "
                f"expected P_dim({n},{N}) = {P_dim(n, N)}")
        if coeffs.ndim - 1 not in (0, 1, 2):
            raise ShapeMismatchError(f"unsupported value shape {coeffs.shape[1:]}")
        if coeffs.ndim == 3 and coeffs.shape[1] != coeffs.shape[2]:
            raise ShapeMismatchError("matrix-valued jets must be square")
        coeffs.setflags(write=False)
        self.n = n
        self.N = N
        self._coeffs = coeffs

    # -- construction -------------------------------------------------

    @classmethod
    def zero(cls, n: int, N: int, shape=(), dtype=np.float64) -> "Jet":
        vs = _as_value_shape(shape)
        return cls(n, N, np.zeros((P_dim(n, N),) + vs, dtype=dtype), copy=False)

    @classmethod
    def constant(cls, n: int, N: int, value, dtype=None) -> "Jet":
        value = np.asarray(value)
        if dtype is None:
            dtype = np.complex128 if np.iscomplexobj(value) else np.float64
        out = np.zeros((P_dim(n, N),) + value.shape, dtype=dtype)
        out[0] = value
        return cls(n, N, out, copy=False)

    @classmethod
    def coordinate(cls, n: int, N: int, i: int, dtype=np.float64) -> "Jet":
        if not 0 <= i < n:
            raise ValueError(f"coordinate index {i} out of range for n={n}")
        if N < 1:
            raise ValueError("coordinate jets need N >= 1")
        out = np.zeros(P_dim(n, N), dtype=dtype)
        alpha = tuple(1 if j == i else 0 for j in range(n))
        out[monomial_rank(n, N)[alpha]] = 1.0
        return cls(n, N, out, copy=False)

    @classmethod
    def from_terms(cls, n: int, N: int, terms: dict, shape=(), dtype=None) -> "Jet":
        """Build a jet from {multi-index: coefficient}; omitted indices are zero."""
        vs = _as_value_shape(shape)
        if dtype is None:
            cplx = any(np.iscomplexobj(np.asarray(v)) for v in terms.values())
            dtype = np.complex128 if cplx else np.float64
        out = np.zeros((P_dim(n, N),) + vs, dtype=dtype)
        rank = monomial_rank(n, N)
        for alpha, coeff in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha}")
            if sum(alpha) > N:
                raise ValueError(f"multi-index {alpha} exceeds order N={N}")
            out[rank[alpha]] = coeff
        return cls(n, N, out, copy=False)

    # -- basic introspection ------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def value_shape(self) -> tuple:
        return self._coeffs.shape[1:]

    @property
    def dtype(self):
        return self._coeffs.dtype

    @property
    def is_complex(self) -> bool:
        return self._coeffs.dtype == np.complex128

    def coefficient(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        return self._coeffs[monomial_rank(self.n, self.N)[alpha]]

    def terms(self):
        """Yield (alpha, coefficient) for nonzero coefficients in graded-lex order."""
        for alpha, c in zip(monomials(self.n, self.N), self._coeffs):
            if np.any(c != 0):
                yield alpha, c

    def norm(self) -> float:
        """Euclidean norm of the coefficient array."""
        return float(np.linalg.norm(self._coeffs.ravel()))

    def vanishing_order(self, tol: float = 0.0):
        """Smallest degree with a coefficient of magnitude > tol; inf for the zero jet."""
        starts = degree_starts(self.n, self.N)
        flat = self._coeffs.reshape(self._coeffs.shape[0], -1)
        for k in range(self.N + 1):
            block = flat[starts[k]:starts[k + 1]]
            if block.size and np.max(np.abs(block)) > tol:
                return k
        return math.inf

    # -- structural ops ------------------------------------------------

    def project(self, K: int) -> "Jet":
        """Truncate to order K <= N (the quotient map P_N -> P_K)."""
        if K > self.N:
            raise ValueError(f"cannot project order-{self.N} jet up to order {K}")
        if K == self.N:
            return self
        return Jet(self.n, K, self._coeffs[:P_dim(self.n, K)])

    def extend(self, K: int) -> "Jet":
        """Zero-pad to order K >= N, treating the jet as polynomial data."""
        if K < self.N:
            raise ValueError(f"extend target {K} below current order {self.N}")
        if K == self.N:
            return self
        out = np.zeros((P_dim(self.n, K),) + self.value_shape, dtype=self.dtype)
        out[:self._coeffs.shape[0]] = self._coeffs
        return Jet(self.n, K, out, copy=False)

    def homogeneous_part(self, k: int) -> "Jet":
        """The degree-k slice, returned as an order-N jet."""
        if not 0 <= k <= self.N:
            raise ValueError(f"degree {k} outside [0, {self.N}]")
        starts = degree_starts(self.n, self.N)
        out = np.zeros_like(self._coeffs)
        out[starts[k]:starts[k + 1]] = self._coeffs[starts[k]:starts[k + 1]]
        return Jet(self.n, self.N, out, copy=False)

    def partial(self, i: int) -> "Jet":
        """Partial derivative d/dy_i as an order N-1 jet."""
        if self.N < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        src, dst, fac = _diff_table(self.n, self.N, i)
        out = np.zeros((P_dim(self.n, self.N - 1),) + self.value_shape,
                       dtype=self.dtype)
        fac = fac.reshape((-1,) + (1,) * len(self.value_shape))
        np.add.at(out, dst, self._coeffs[src] * fac)
        return Jet(self.n, self.N - 1, out, copy=False)

    def evaluate(self, point):
        """Evaluate the polynomial representative at a point (ndarray of length n)."""
        point = np.asarray(point)
        E = monomial_powers(self.n, self.N)
        mono = np.prod(point[None, :] ** E, axis=1)
        return np.tensordot(mono, self._coeffs, axes=1)

    def astype(self, dtype) -> "Jet":
        return Jet(self.n, self.N, self._coeffs.astype(dtype))

    def to_complex(self) -> "Jet":
        return self.astype(np.complex128)

    # -- arithmetic ----------------------------------------------------

    def _check_compatible(self, other: "Jet"):
        if self.n != other.n or self.N != other.N:
            raise ShapeMismatchError(
                f"incompatible jets: (n={self.n}, N={self.N}) vs "
                f"(n={other.n}, N={other.N})")
        if self.dtype != other.dtype:
            raise FieldMismatchError(
                "mixing real and complex jets; promote with .to_complex() first")

    def __add__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        self._check_compatible(other)
        if self.value_shape != other.value_shape:
            raise ShapeMismatchError(
                f"value shapes differ: {self.value_shape} vs {other.value_shape}")
        return Jet(self.n, self.N, self._coeffs + other._coeffs, copy=False)

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return Jet(self.n, self.N, -self._coeffs, copy=False)

    def _scale(self, c):
        if isinstance(c, (complex, np.complexfloating)) and not self.is_complex \
                and getattr(c, "imag", 0.0) != 0.0:
            raise FieldMismatchError(
                "complex scalar times real jet; promote with .to_complex() first")
        return Jet(self.n, self.N, self._coeffs * c, copy=False)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        if isinstance(other, (int, float, complex, np.integer, np.floating,
                              np.complexfloating)):
            return self._scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.integer, np.floating,
                              np.complexfloating)):
            return self._scale(other)
        return NotImplemented

    # -- comparison ----------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.n == other.n and self.N == other.N
                and self.value_shape == other.value_shape
                and bool(np.array_equal(self._coeffs, other._coeffs)))

    def __hash__(self):
        return hash((self.n, self.N, self.value_shape, self._coeffs.tobytes()))

    def allclose(self, other: "Jet", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        return (self.n == other.n and self.N == other.N
                and self.value_shape == other.value_shape
                and bool(np.allclose(self._coeffs, other._coeffs,
                                     rtol=rtol, atol=atol)))

    def __repr__(self):
        kind = {0: "scalar", 1: "vector", 2: "matrix"}[len(self.value_shape)]
        return (f"Jet(n={self.n}, N={self.N}, {kind}, "
                f"{sum(1 for _ in self.terms())} terms)")


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Truncated Cauchy product.

    Supported value pairings: scalar*scalar, scalar*vector, scalar*matrix
    (either order), matrix*vector and matrix*matrix (in that order).
    """
    a._check_compatible(b)
    ii, jj, kk = _mul_table(a.n, a.N)
    sa, sb = a.value_shape, b.value_shape
    A = a.coeffs[ii]
    B = b.coeffs[jj]
    if sa == ():
        prod = (A.reshape(A.shape + (1,) * len(sb))) * B
        out_shape = sb
    elif sb == ():
        prod = A * (B.reshape(B.shape + (1,) * len(sa)))
        out_shape = sa
    elif len(sa) == 2 and len(sb) == 1:
        if sa[1] != sb[0]:
            raise ShapeMismatchError(f"matrix {sa} times vector {sb}")
        prod = np.einsum("tpq,tq->tp", A, B)
        out_shape = (sa[0],)
    elif len(sa) == 2 and len(sb) == 2:
        if sa[1] != sb[0]:
            raise ShapeMismatchError(f"matrix {sa} times matrix {sb}")
        prod = np.einsum("tpq,tqr->tpr", A, B)
        out_shape = (sa[0], sb[1])
    else:
        raise ShapeMismatchError(f"unsupported product shapes {sa} x {sb}")
    out = np.zeros((P_dim(a.n, a.N),) + out_shape, dtype=prod.dtype)
    np.add.at(out, kk, prod)
    return Jet(a.n, a.N, out, copy=False)


def jet_project(u: Jet, K: int) -> Jet:
    """Truncate u to order K (quotient map)."""
    return u.project(K)


class VectorFieldJet:
    """A vector field given by n scalar jets with vanishing constant term."""

    __slots__ = ("components",)

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("vector field needs at least one component")
        n = components[0].n
        N = components[0].N
        for c in components:
            if c.value_shape != ():
                raise ShapeMismatchError("vector field components must be scalar jets")
            if c.n != n or c.N != N:
                raise ShapeMismatchError("vector field components must share (n, N)")
        if len(components) != n:
            raise ShapeMismatchError(
                f"{len(components)} components for n={n} variables")
        if N < 1:
            raise ShapeMismatchError(
                "vector field jets need order N >= 1 to carry a linear part")
        for i, c in enumerate(components):
            if np.any(c.coeffs[0] != 0):
                raise ValueError(
                    f"component {i} has a nonzero constant term; "
                    "the field must vanish at the base point")
        self.components = components

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def N(self) -> int:
        return self.components[0].N

    @property
    def dtype(self):
        return np.result_type(*(c.dtype for c in self.components))

    @property
    def linearization(self) -> np.ndarray:
        """Matrix a[i, j] = coefficient of y_j in component i."""
        n, N = self.n, self.N
        rank = monomial_rank(n, N)
        A = np.zeros((n, n), dtype=self.dtype)
        for i, c in enumerate(self.components):
            for j in range(n):
                e_j = tuple(1 if k == j else 0 for k in range(n))
                A[i, j] = c.coeffs[rank[e_j]]
        return A

    @classmethod
    def euler(cls, n: int, N: int, dtype=np.float64) -> "VectorFieldJet":
        """The radial field sum_i y_i d/dy_i."""
        return cls(tuple(Jet.coordinate(n, N, i, dtype=dtype) for i in range(n)))

    @classmethod
    def from_linear(cls, A: np.ndarray, N: int) -> "VectorFieldJet":
        """The linear field with dX(0) = A."""
        A = np.asarray(A)
        n = A.shape[0]
        comps = []
        for i in range(n):
            terms = {}
            for j in range(n):
                if A[i, j] != 0:
                    e_j = tuple(1 if k == j else 0 for k in range(n))
                    terms[e_j] = A[i, j]
            comps.append(Jet.from_terms(n, N, terms,
                                        dtype=np.complex128 if np.iscomplexobj(A)
                                        else np.float64))
        return cls(comps)

    @classmethod
    def from_gradient(cls, phi: Jet) -> "VectorFieldJet":
        """The gradient field of a scalar jet (components d phi/d y_i, padded to order N)."""
        if phi.value_shape != ():
            raise ShapeMismatchError("gradient needs a scalar jet")
        return cls(tuple(phi.partial(i).extend(phi.N) for i in range(phi.n)))

    def to_complex(self) -> "VectorFieldJet":
        return VectorFieldJet(tuple(c.to_complex() for c in self.components))

    def extend(self, K: int) -> "VectorFieldJet":
        return VectorFieldJet(tuple(c.extend(K) for c in self.components))

    def project(self, K: int) -> "VectorFieldJet":
        return VectorFieldJet(tuple(c.project(K) for c in self.components))

    def __repr__(self):
        return f"VectorFieldJet(n={self.n}, N={self.N})"


def jet_directional_derivative(X: VectorFieldJet, u: Jet) -> Jet:
    """The derivative sum_i X^i * du/dy_i, exact on P_N because X(0) = 0.

    The degree-k part of the result depends only on coefficients of u of
    degree <= k, so the operation descends to the quotient P_N.
    """
    if X.n != u.n:
        raise ShapeMismatchError(f"field in {X.n} variables, jet in {u.n}")
    if X.N != u.N:
        raise ShapeMismatchError(f"field order {X.N} != jet order {u.N}")
    if u.N == 0:
        return Jet.zero(u.n, 0, u.value_shape, dtype=np.result_type(X.dtype, u.dtype))
    out = None
    for i in range(u.n):
        # padding the (unknown) top-degree slot of du/dy_i with zeros is
        # harmless: it only ever multiplies the vanishing constant term of X
        term = jet_mul(X.components[i], u.partial(i).extend(u.N))
        out = term if out is None else out + term
    return out


# -- JSON encoding ----------------------------------------------------

def _encode_value(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        if v.ndim == 0:
            return {"re": float(v.real), "im": float(v.imag)}
        return [_encode_value(x) for x in v]
    if v.ndim == 0:
        return float(v)
    return [_encode_value(x) for x in v]


def _decode_value(obj):
    if isinstance(obj, dict):
        return complex(obj["re"], obj["im"])
    if isinstance(obj, list):
        vals = [_decode_value(x) for x in obj]
        return np.array(vals)
    return float(obj)


def jet_to_json(u: Jet) -> dict:
    """Encode a jet; zero coefficients are omitted."""
    vs = u.value_shape
    if vs == ():
        shape = "scalar"
    elif len(vs) == 1:
        shape = f"vector:{vs[0]}"
    else:
        shape = f"matrix:{vs[0]}"
    return {
        "n": u.n,
        "N": u.N,
        "shape": shape,
        "terms": [{"alpha": list(alpha), "coeff": _encode_value(c)}
                  for alpha, c in u.terms()],
    }


def jet_from_json(obj: dict) -> Jet:
    n = int(obj["n"])
    N = int(obj["N"])
    shape_tag = obj.get("shape", "scalar")
    if shape_tag == "scalar":
        vs = ()
    elif shape_tag.startswith("vector:"):
        vs = (int(shape_tag.split(":")[1]),)
    elif shape_tag.startswith("matrix:"):
        m = int(shape_tag.split(":")[1])
        vs = (m, m)
    else:
        raise ValueError(f"unknown shape tag {shape_tag!r}")
    terms = {}
    cplx = False
    for t in obj.get("terms", []):
        val = _decode_value(t["coeff"])
        val = np.asarray(val)
        if val.shape != vs:
            raise ShapeMismatchError(
                f"coefficient shape {val.shape} does not match {shape_tag}")
        terms[tuple(t["alpha"])] = val
        cplx = cplx or np.iscomplexobj(val)
    return Jet.from_terms(n, N, terms, shape=vs,
                          dtype=np.complex128 if cplx else np.float64)
