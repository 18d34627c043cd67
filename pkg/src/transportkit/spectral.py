"""Spectral data of the transport operator: resonances, kernels, dual kernels.

On P_N tensor V the operator D_X + A has eigenvalues

    lambda = alpha . mu + rho_j

where mu are the eigenvalues of the linearization of X and rho those of
A(0).  When every Re mu_i >= nu > 0 only finitely many multi-indices can
hit a given lambda, so resonance enumeration terminates.  The geometric
multiplicity of lambda lies between 1 and the number of representations.

Kernels are computed as SVD null spaces with a relative rank threshold;
dual kernels are left null spaces, returned as distributions supported at
the base point.  A distribution stores one covector per multi-index and
pairs against Taylor-normalized jet coefficients:

    T(u) = sum_alpha t_alpha(u_alpha)

The delta-derivative form uses functionals u -> xi(D^alpha u(0)), which
multiply each Taylor coefficient by alpha!; converting to that form
therefore divides the stored covectors by alpha! (and multiplying by
alpha! converts back).  Keeping the Taylor-normalized form internally
avoids factorial growth in the linear algebra.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    NearResonanceWarning,
    NumericError,
    RankAmbiguityWarning,
    ValidationError,
)
from .jets import Jet, P_dim, VectorFieldJet, monomial_rank, monomials
from .opmatrix import ProblemData, assemble, vec_to_jet

__all__ = [
    "RESONANCE_TOL",
    "NEAR_RESONANCE_TOL",
    "RANK_RTOL",
    "ResonanceEntry",
    "DualDistribution",
    "RankReport",
    "linearization_spectrum",
    "endo_spectrum",
    "enumerate_resonances",
    "nullspace",
    "kernel_basis",
    "dual_kernel_basis",
    "SolvabilityResult",
    "solvability_test",
    "sternberg_resonance_check",
]

RESONANCE_TOL = 1e-9
NEAR_RESONANCE_TOL = 1e-6
RANK_RTOL = 1e-10


def _sorted_spectrum(vals: np.ndarray) -> np.ndarray:
    """Deterministic order: ascending real part, then imaginary part.

    Sort keys are snapped at 1e-12 relative so eigensolver noise cannot
    split a conjugate pair whose real parts are equal in exact arithmetic.
    """
    vals = np.asarray(vals, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
    re_key = np.round(vals.real / scale, 12)
    im_key = np.round(vals.imag / scale, 12)
    order = np.lexsort((im_key, re_key))
    return vals[order]


def linearization_spectrum(X: VectorFieldJet) -> np.ndarray:
    """Eigenvalues mu of the linearization of X, sorted by (Re, Im)."""
    return _sorted_spectrum(np.linalg.eigvals(X.linearization.astype(complex)))


def endo_spectrum(A0: np.ndarray) -> np.ndarray:
    """Eigenvalues rho of the endomorphism A(0), sorted by (Re, Im)."""
    A0 = np.asarray(A0, dtype=complex)
    if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
        raise ValidationError("endo_spectrum expects a square matrix")
    return _sorted_spectrum(np.linalg.eigvals(A0))


@dataclass(frozen=True)
class ResonanceEntry:
    """All ways to write lambda = alpha . mu + rho_j within tolerance."""

    lam: complex
    representations: tuple  # of (alpha tuple, rho index)
    max_alpha_degree: int

    @property
    def multiplicity(self) -> int:
        return len(self.representations)


def _degree_bound(mu: np.ndarray, rho: np.ndarray, re_target: float,
                  tol: float):
    """Largest |alpha| that can reach Re(alpha.mu + rho_j) <= re_target + tol."""
    nu = float(np.min(mu.real))
    if nu <= 0:
        raise ValidationError(
            "resonance enumeration needs Re mu_i > 0 for every eigenvalue "
            f"of the linearization (got min Re mu = {nu})")
    slack = re_target - float(np.min(rho.real)) + tol
    if slack < 0:
        return -1
    return int(math.floor(slack / nu))


def enumerate_resonances(mu, rho, lam, tol: float = RESONANCE_TOL,
                         warn_tol: float = NEAR_RESONANCE_TOL):
    """Find every (alpha, j) with |alpha . mu + rho_j - lam| <= tol.

    Returns a ResonanceEntry, or None when lambda is non-resonant.
    Combinations missing lambda by less than warn_tol (but more than tol)
    trigger a NearResonanceWarning.  Representations are listed in
    graded-lex order on alpha, then by rho index.
    """
    mu = np.asarray(mu, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    lam = complex(lam)
    n = mu.shape[0]
    amax = _degree_bound(mu, rho, lam.real, max(tol, warn_tol))
    reps = []
    near = []
    if amax >= 0:
        for alpha in monomials(n, amax):
            base = sum(a * u for a, u in zip(alpha, mu))
            for j in range(rho.shape[0]):
                gap = abs(base + rho[j] - lam)
                if gap <= tol:
                    reps.append((alpha, j))
                elif gap <= warn_tol:
                    near.append((alpha, j, gap))
    for alpha, j, gap in near:
        warnings.warn(
            f"near resonance: alpha={alpha}, rho index {j} misses lambda "
            f"by {gap:.3e}", NearResonanceWarning, stacklevel=2)
    if not reps:
        return None
    return ResonanceEntry(lam=lam, representations=tuple(reps),
                          max_alpha_degree=max(sum(a) for a, _ in reps))


@dataclass(frozen=True)
class RankReport:
    """Diagnostics of an SVD rank decision."""

    singular_values: np.ndarray
    threshold: float
    rank: int
    nullity: int
    gap: float  # ratio of smallest kept to largest dropped singular value


def nullspace(mat: np.ndarray, rtol: float = RANK_RTOL):
    """Orthonormal right null space basis via SVD.

    Returns (basis, report) where basis has shape (dim, nullity).  The rank
    threshold is rtol * sigma_max.  A gap below 1e3 between the singular
    values on either side of the threshold triggers RankAmbiguityWarning.
    """
    mat = np.asarray(mat)
    U, s, Vh = np.linalg.svd(mat)
    sigma_max = s[0] if s.size else 0.0
    threshold = rtol * sigma_max
    rank = int(np.sum(s > threshold))
    nullity = mat.shape[1] - rank
    kept = s[rank - 1] if rank > 0 else np.inf
    dropped = s[rank] if rank < s.size else 0.0
    gap = float(kept / dropped) if dropped > 0 else math.inf
    if nullity > 0 and gap < 1e3:
        warnings.warn(
            f"rank decision ambiguous: singular-value gap {gap:.2e} around "
            f"threshold {threshold:.3e}", RankAmbiguityWarning, stacklevel=2)
    basis = Vh[rank:].conj().T
    return _canonicalize_columns(basis), RankReport(
        singular_values=s, threshold=float(threshold), rank=rank,
        nullity=nullity, gap=gap)


def _canonicalize_columns(basis: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest entry is real and positive (deterministic output)."""
    basis = np.array(basis)
    for k in range(basis.shape[1]):
        col = basis[:, k]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if pivot != 0:
            basis[:, k] = col * (abs(pivot) / pivot)
    if not np.iscomplexobj(basis):
        return basis
    if np.max(np.abs(basis.imag)) == 0.0:
        return basis.real.copy()
    return basis


def _resonance_of(p: ProblemData, tol: float):
    mu = linearization_spectrum(p.X)
    rho = endo_spectrum(p.A.coeffs[0])
    return enumerate_resonances(mu, rho, p.lam, tol)


def _working_problem(p: ProblemData, tol: float):
    entry = _resonance_of(p, tol)
    n_star = entry.max_alpha_degree if entry is not None else 0
    return p.at_order(max(p.N, n_star)), entry


def kernel_basis(p: ProblemData, rtol: float = RANK_RTOL,
                 tol: float = RESONANCE_TOL):
    """Jets spanning the kernel of (D_X + A - lambda) on P_N tensor V.

    The working order is raised to the largest resonance degree when the
    stated N is below it.  Returns [] for non-resonant lambda.
    """
    q, _ = _working_problem(p, tol)
    M = assemble(q)
    shifted = M.entries - q.lam * np.eye(M.dim)
    basis, _ = nullspace(shifted, rtol)
    return [vec_to_jet(basis[:, k], q.n, q.N, q.m)
            for k in range(basis.shape[1])]


class DualDistribution:
    """A functional supported at the base point, of finite order.

    Stores one covector per multi-index with |alpha| <= order, shape
    (P_dim(n, order), m).  Pairing: T(u) = sum_alpha coeffs[alpha] . u_alpha
    against Taylor-normalized coefficients of u.
    """

    __slots__ = ("n", "order", "_coeffs")

    def __init__(self, n: int, order: int, coeffs: np.ndarray, *, copy=True):
        coeffs = np.array(coeffs, copy=copy)
        if coeffs.shape[0] != P_dim(n, order) or coeffs.ndim != 2:
            raise ValidationError(
                f"dual coefficients must have shape (P_dim({n},{order}), m)")
        coeffs.setflags(write=False)
        self.n = n
        self.order = order
        self._coeffs = coeffs

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def m(self) -> int:
        return self._coeffs.shape[1]

    def pair(self, u: Jet):
        """Evaluate on a vector-valued jet of order >= self.order."""
        if u.n != self.n:
            raise ValidationError("variable count mismatch in dual pairing")
        if len(u.value_shape) != 1 or u.value_shape[0] != self.m:
            raise ValidationError("dual pairing needs a matching vector-valued jet")
        if u.N < self.order:
            u = u.extend(self.order)
        head = u.coeffs[:self._coeffs.shape[0]]
        val = np.sum(self._coeffs * head)  # bilinear pairing, no conjugation
        return complex(val) if np.iscomplexobj(val) else float(val)

    def to_delta_form(self) -> dict:
        """Coefficients against the functionals u -> D^alpha u(0).

        Those functionals act on a jet as alpha! times the Taylor
        coefficient, so the stored covectors are divided by alpha!.
        """
        out = {}
        for r, alpha in enumerate(monomials(self.n, self.order)):
            c = self._coeffs[r]
            if np.any(c != 0):
                fact = math.prod(math.factorial(a) for a in alpha)
                out[alpha] = c / fact
        return out

    @classmethod
    def from_delta_form(cls, n: int, order: int, deltas: dict, m: int):
        """Inverse of to_delta_form: multiplies each covector by alpha!."""
        coeffs = np.zeros((P_dim(n, order), m))
        cplx = any(np.iscomplexobj(np.asarray(v)) for v in deltas.values())
        if cplx:
            coeffs = coeffs.astype(complex)
        rank = monomial_rank(n, order)
        for alpha, xi in deltas.items():
            fact = math.prod(math.factorial(a) for a in alpha)
            coeffs[rank[tuple(alpha)]] = np.asarray(xi) * fact
        return cls(n, order, coeffs, copy=False)

    def to_json(self) -> dict:
        from .jets import _encode_value
        terms = []
        for r, alpha in enumerate(monomials(self.n, self.order)):
            c = self._coeffs[r]
            if np.any(c != 0):
                terms.append({"alpha": list(alpha), "covector": _encode_value(c)})
        return {"n": self.n, "order": self.order, "m": self.m, "terms": terms}

    def __repr__(self):
        return f"DualDistribution(n={self.n}, order={self.order}, m={self.m})"


_DUAL_TAIL_TOL = 1e-8


def dual_kernel_basis(p: ProblemData, rtol: float = RANK_RTOL,
                      tol: float = RESONANCE_TOL):
    """Distributions spanning the kernel of the adjoint of (D_X + A - lambda).

    Computed as the left null space of the assembled matrix at the working
    order, then truncated to the largest resonance degree N'.  The theory
    says components above N' vanish; this is asserted with tolerance
    rather than assumed.
    """
    q, entry = _working_problem(p, tol)
    M = assemble(q)
    shifted = M.entries - q.lam * np.eye(M.dim)
    basis, _ = nullspace(shifted.T, rtol)
    if basis.shape[1] == 0:
        return []
    n_prime = entry.max_alpha_degree if entry is not None else 0
    head_rows = P_dim(q.n, n_prime) * q.m
    out = []
    for k in range(basis.shape[1]):
        vec = basis[:, k]
        tail = np.linalg.norm(vec[head_rows:])
        if tail > _DUAL_TAIL_TOL * np.linalg.norm(vec):
            raise NumericError(
                f"dual kernel vector has weight {tail:.3e} above the "
                f"resonance degree {n_prime}; the order bound failed")
        out.append(DualDistribution(
            q.n, n_prime, vec[:head_rows].reshape(P_dim(q.n, n_prime), q.m)))
    return out


@dataclass(frozen=True)
class SolvabilityResult:
    solvable: bool
    obstructions: tuple  # values of the dual kernel basis on v


def solvability_test(p: ProblemData, tol: float = 1e-9,
                     rtol: float = RANK_RTOL) -> SolvabilityResult:
    """Check whether every dual kernel functional annihilates v.

    The aggregate criterion sqrt(sum |T_i(v)|^2) <= tol * ||v|| matches the
    least-squares residual of the projected system because the T_i form an
    orthonormal basis of the left null space.
    """
    duals = dual_kernel_basis(p, rtol)
    q = p.at_order(max(p.N, max((d.order for d in duals), default=0)))
    obstructions = tuple(d.pair(q.v) for d in duals)
    scale = max(q.v.norm(), np.finfo(float).tiny)
    total = math.sqrt(sum(abs(o) ** 2 for o in obstructions))
    return SolvabilityResult(solvable=bool(total <= tol * scale),
                             obstructions=obstructions)


def sternberg_resonance_check(mu, tol: float = RESONANCE_TOL):
    """List (j, alpha) with |alpha| >= 2 and mu_j = alpha . mu within tol.

    An empty list means the linearization spectrum admits no resonant
    integer combinations, the obstruction relevant for smooth
    linearization of the field.
    """
    mu = np.asarray(mu, dtype=complex)
    if np.min(mu.real) <= 0:
        raise ValidationError("sternberg check needs Re mu_i > 0")
    n = mu.shape[0]
    violations = []
    for j in range(n):
        amax = _degree_bound(mu, np.zeros(1), mu[j].real, tol)
        if amax < 2:
            continue
        for alpha in monomials(n, amax):
            if sum(alpha) < 2:
                continue
            if abs(sum(a * u for a, u in zip(alpha, mu)) - mu[j]) <= tol:
                violations.append((j, alpha))
    return violations
