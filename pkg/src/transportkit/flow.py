"""Point evaluation of decaying solutions along the backward flow.

For fields sampled as callables, the solution of (D_X + A - lambda) u = v
at a point y is the integral of E(s, y)^{-1} v(Phi_s(y)) over s in
(-inf, 0], where Phi is the flow of X and the transition frame E solves
dE/dt = -A(Phi_t(y)) E, E(0) = id (lambda absorbed into A beforehand).
The joint state (position, inverse frame, accumulated integral) is one
ODE system, integrated forward in reversed time tau = -t with an
adaptive embedded Runge-Kutta 5(4) pair.

When A(p) - lambda has an eigenvalue with nonpositive real part the raw
integral diverges; the solution splits into a polynomial head (from the
order-by-order solver) plus a flat remainder whose integral does decay.

Everything here is real arithmetic.  Complex eigenvalue shifts are the
jet solver's territory; they are rejected up front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    FlowIntegrationError,
    QuantityUnderflowError,
    RegionExitError,
    ResonantProblemError,
    TailDecayError,
    ValidationError,
)
from .jets import Jet, degree_starts
from .opmatrix import ProblemData
from .spectral import endo_spectrum, enumerate_resonances, linearization_spectrum
from .taylor import MAX_ORDER, residual, solve_to_order

__all__ = [
    "EvalConfig",
    "EvaluationResult",
    "FieldSampler",
    "FlowState",
    "FlowTrajectory",
    "integrate_flow",
    "evaluate_solution",
    "empirical_decay_rate",
]

_FRAME_OVERFLOW = 1e100
_UNDERFLOW = 1e-250


@dataclass(frozen=True)
class EvalConfig:
    """Tolerances and policy knobs for evaluate_solution."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    tail_tol: float = 1e-12
    max_horizon: float = 200.0
    split_order: int | None = None  # None picks the smallest decaying order
    chunk: float = 10.0  # horizon extension between tail checks
    t_min: float = 2.0  # smallest |t| at which the tail may stop


@dataclass(frozen=True)
class FieldSampler:
    """Pointwise samplers for X, A, v around a declared source point.

    The callables take a length-n point and return arrays of shape (n,),
    (m, m) and (m,).  They must be pure and safe to call concurrently.
    radius bounds the trusted ball around the source; trajectories are
    stopped with RegionExitError when they leave it.  consistent_jets,
    when given, is cross-checked at construction: the finite-difference
    linearization of X_eval must match the jet linearization.
    """

    X_eval: object
    A_eval: object
    v_eval: object
    source: np.ndarray
    radius: float = math.inf
    consistent_jets: ProblemData | None = None
    polynomial: bool = False  # samplers are exactly the jet polynomials

    def __post_init__(self):
        source = np.atleast_1d(np.asarray(self.source, dtype=float))
        object.__setattr__(self, "source", source)
        x0 = np.asarray(self.X_eval(source), dtype=float)
        A0 = np.asarray(self.A_eval(source), dtype=float)
        v0 = np.asarray(self.v_eval(source), dtype=float)
        n = source.shape[0]
        if x0.shape != (n,):
            raise ValidationError(f"X_eval must return shape ({n},), got {x0.shape}")
        if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
            raise ValidationError(f"A_eval must return a square matrix, got {A0.shape}")
        m = A0.shape[0]
        if v0.shape != (m,):
            raise ValidationError(f"v_eval must return shape ({m},), got {v0.shape}")
        if not self.radius > 0:
            raise ValidationError("radius must be positive")
        scale = 1.0 + float(np.linalg.norm(source))
        if np.linalg.norm(x0) > 1e-8 * scale:
            raise ValidationError(
                f"X does not vanish at the declared source: |X(p)| = "
                f"{np.linalg.norm(x0):.3e}")
        object.__setattr__(self, "_shape", (n, m))
        jets = self.consistent_jets
        if jets is not None:
            if jets.is_complex:
                raise ValidationError("flow sampling is real arithmetic; "
                                      "complex jet data is not supported here")
            if (jets.n, jets.m) != (n, m):
                raise ValidationError(
                    f"consistent_jets has (n, m) = {(jets.n, jets.m)}, "
                    f"samplers have {(n, m)}")
            fd = self.linearization()
            exact = jets.X.linearization
            if np.max(np.abs(fd - exact)) > 1e-4:
                raise ValidationError(
                    "finite-difference linearization of X_eval disagrees with "
                    f"the declared jets (max deviation "
                    f"{np.max(np.abs(fd - exact)):.3e})")

    @property
    def n(self) -> int:
        return self._shape[0]

    @property
    def m(self) -> int:
        return self._shape[1]

    def linearization(self, step: float = 1e-6) -> np.ndarray:
        """Jacobian of X_eval at the source by central differences."""
        n = self.n
        J = np.zeros((n, n))
        for j in range(n):
            h = np.zeros(n)
            h[j] = step
            J[:, j] = (np.asarray(self.X_eval(self.source + h))
                       - np.asarray(self.X_eval(self.source - h))) / (2 * step)
        return J

    @classmethod
    def from_problem(cls, p: ProblemData, radius: float = math.inf) -> "FieldSampler":
        """Samplers that evaluate the jet polynomials exactly (source at the origin)."""
        if p.is_complex:
            raise ValidationError("flow sampling is real arithmetic; use the "
                                  "jet solver for complex problems")
        comps = p.X.components
        A, v = p.A, p.v
        return cls(
            X_eval=lambda y: np.array([c.evaluate(y) for c in comps]),
            A_eval=lambda y: np.asarray(A.evaluate(y)),
            v_eval=lambda y: np.asarray(v.evaluate(y)),
            source=np.zeros(p.n),
            radius=radius,
            consistent_jets=p,
            polynomial=True,
        )


@dataclass(frozen=True)
class FlowState:
    """Snapshot of the joint backward-flow state at a time t <= 0.

    y_t = Phi_t(y), Finv = E(t, y)^{-1}, and I accumulates
    the integral of E(s, y)^{-1} v(Phi_s(y)) over s in [t, 0].
    """

    t: float
    y_t: np.ndarray
    Finv: np.ndarray
    I: np.ndarray


class FlowTrajectory:
    """Dense-output trajectory of (y_t, Finv, I) on [t_end, 0]."""

    def __init__(self, sampler: FieldSampler, dense, t_end: float):
        self._sampler = sampler
        self._dense = dense
        self.t_end = t_end
        self.n = sampler.n
        self.m = sampler.m

    def at(self, t: float) -> FlowState:
        if not self.t_end <= t <= 0.0:
            raise ValidationError(
                f"time {t} outside the integrated window [{self.t_end}, 0]")
        z = self._dense(-t)
        n, m = self.n, self.m
        return FlowState(t=float(t), y_t=z[:n],
                         Finv=z[n:n + m * m].reshape(m, m),
                         I=z[n + m * m:])

    @property
    def final(self) -> FlowState:
        return self.at(self.t_end)

    def states(self, times) -> list:
        return [self.at(float(t)) for t in times]


def _pack(y: np.ndarray, Finv: np.ndarray, I: np.ndarray) -> np.ndarray:
    return np.concatenate([y, Finv.reshape(-1), I])


def _reversed_rhs(f: FieldSampler):
    """RHS of the time-reversed joint system in tau = -t >= 0."""
    n, m = f.n, f.m

    def rhs(_tau, z):
        y = z[:n]
        Finv = z[n:n + m * m].reshape(m, m)
        dy = -np.asarray(f.X_eval(y), dtype=float)
        dF = -Finv @ np.asarray(f.A_eval(y), dtype=float)
        dI = Finv @ np.asarray(f.v_eval(y), dtype=float)
        return np.concatenate([dy, dF.reshape(-1), dI])

    return rhs


def _events(f: FieldSampler):
    n, m = f.n, f.m
    events = []
    if math.isfinite(f.radius):
        def exit_event(_tau, z, _f=f):
            return _f.radius - float(np.linalg.norm(z[:n] - _f.source))
        exit_event.terminal = True
        events.append(("exit", exit_event))

    def overflow_event(_tau, z):
        return _FRAME_OVERFLOW - float(np.linalg.norm(z[n:n + m * m]))
    overflow_event.terminal = True
    events.append(("overflow", overflow_event))
    return events


def _integrate_segment(f: FieldSampler, z0: np.ndarray, tau0: float,
                       tau1: float, rel_tol: float, abs_tol: float,
                       first_step: float | None = None):
    """One solve_ivp call on [tau0, tau1]; returns the scipy result."""
    named = _events(f)
    res = solve_ivp(_reversed_rhs(f), (tau0, tau1), z0, method="RK45",
                    rtol=rel_tol, atol=abs_tol, dense_output=True,
                    first_step=first_step,
                    events=[ev for _, ev in named])
    if res.status == -1:
        raise FlowIntegrationError(f"integrator failed: {res.message}")
    if res.status == 1:
        n = f.n
        for (name, _), t_hits, z_hits in zip(named, res.t_events, res.y_events):
            if len(t_hits) == 0:
                continue
            if name == "exit":
                raise RegionExitError(
                    "trajectory left the declared region of radius "
                    f"{f.radius:g} at t = {-t_hits[0]:.6g}",
                    point=z_hits[0][:n], t=-float(t_hits[0]))
            raise FlowIntegrationError(
                f"inverse frame norm exceeded {_FRAME_OVERFLOW:.0e} at "
                f"t = {-t_hits[0]:.6g}; the integral cannot converge")
    return res


def integrate_flow(f: FieldSampler, y, t_end: float, *,
                   rel_tol: float = 1e-9,
                   abs_tol: float = 1e-12,
                   first_step: float | None = None) -> FlowTrajectory:
    """Integrate the joint (y_t, Finv, I) system from 0 back to t_end <= 0."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (f.n,):
        raise ValidationError(f"point must have shape ({f.n},), got {y.shape}")
    if t_end > 0:
        raise ValidationError("t_end must be nonpositive")
    if np.linalg.norm(y - f.source) > f.radius:
        raise ValidationError("evaluation point outside the declared region")
    z0 = _pack(y, np.eye(f.m), np.zeros(f.m))
    if t_end == 0.0:
        return FlowTrajectory(f, lambda _tau: z0.copy(), 0.0)
    res = _integrate_segment(f, z0, 0.0, -t_end, rel_tol, abs_tol, first_step)
    return FlowTrajectory(f, res.sol, t_end)


@dataclass(frozen=True)
class EvaluationResult:
    """u(y) with convergence diagnostics of the tail integration."""

    u: np.ndarray
    tail_estimate: float
    horizon: float  # most negative time actually integrated
    rate: float  # fitted decay rate of the integrand (in t, positive = decaying)
    mode: str  # "direct" or "split"
    split_order: int | None


def _fit_rate(ts: np.ndarray, gs: np.ndarray) -> float:
    """Least-squares slope of log g against t."""
    logs = np.log(np.maximum(gs, _UNDERFLOW * 1e-40))
    slope = np.polyfit(ts, logs, 1)[0]
    return float(slope)


def _tail_integrate(f: FieldSampler, y: np.ndarray, cfg: EvalConfig):
    """Integrate until the integrand decays below tail_tol, in chunks.

    Returns (I, tail_estimate, horizon, rate).  The integrand norm
    g(t) = |Finv v(y_t)| is fitted against t over the trailing window and
    the stop requires both g <= tail_tol and a positive fitted rate.
    """
    n, m = f.n, f.m
    z = _pack(np.asarray(y, dtype=float), np.eye(m), np.zeros(m))
    tau = 0.0
    window_ts: list = []
    window_gs: list = []

    def integrand_norm(zz) -> float:
        Finv = zz[n:n + m * m].reshape(m, m)
        vv = np.asarray(f.v_eval(zz[:n]), dtype=float)
        return float(np.linalg.norm(Finv @ vv))

    while True:
        tau1 = min(tau + cfg.chunk, cfg.max_horizon)
        res = _integrate_segment(f, z, tau, tau1, cfg.rel_tol, cfg.abs_tol)
        taus = np.linspace(tau, tau1, 17)[1:]
        for tk in taus:
            window_ts.append(-tk)
            window_gs.append(integrand_norm(res.sol(tk)))
        z = res.y[:, -1]
        tau = tau1
        keep = [i for i, t in enumerate(window_ts) if t <= -tau + 2.5 * cfg.chunk]
        window_ts = [window_ts[i] for i in keep]
        window_gs = [window_gs[i] for i in keep]

        g_last = window_gs[-1]
        if g_last <= _UNDERFLOW:
            return z[n + m * m:], 0.0, -tau, math.inf
        rate = _fit_rate(np.array(window_ts), np.array(window_gs))
        if tau >= cfg.t_min and g_last <= cfg.tail_tol and rate > 0:
            return z[n + m * m:], g_last / rate, -tau, rate
        if tau >= cfg.max_horizon:
            if rate <= 0:
                raise TailDecayError(
                    "integrand shows no decay within the horizon "
                    f"(fitted rate {rate:.3e} at t = {-tau:.1f})")
            return z[n + m * m:], g_last / rate, -tau, rate


def _shifted(f: FieldSampler, lam: float) -> FieldSampler:
    """Absorb the eigenvalue: A <- A - lam id."""
    if lam == 0.0:
        return f
    A_orig = f.A_eval
    m = f.m
    return replace(f, A_eval=lambda q: np.asarray(A_orig(q), dtype=float)
                   - lam * np.eye(m), consistent_jets=None)


def evaluate_solution(f: FieldSampler, p: ProblemData | None, y,
                      cfg: EvalConfig = EvalConfig()) -> EvaluationResult:
    """u(y) for (D_X + A) u = lambda u + v via the backward-flow integral.

    When every eigenvalue of A(p) - lambda has positive real part the
    integral converges as it stands (direct mode).  Otherwise the
    polynomial head of the solution is split off at an order high enough
    that the remainder decays (split mode); that head comes from the jet
    solver, so p (or f.consistent_jets) must carry jet data.  Resonant
    lambda has no canonical decaying solution and is rejected.
    """
    if p is None:
        p = f.consistent_jets
    if p is None:
        raise ValidationError("evaluate_solution needs problem jets: pass p "
                              "or build the sampler with consistent_jets")
    if p.is_complex or abs(complex(p.lam).imag) > 0:
        raise ValidationError("flow evaluation is real arithmetic; complex "
                              "problems are only supported by the jet solver")
    lam = float(np.real(p.lam))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (f.n,):
        raise ValidationError(f"point must have shape ({f.n},), got {y.shape}")
    if np.linalg.norm(y - f.source) > f.radius:
        raise ValidationError("evaluation point outside the declared region")

    mu = linearization_spectrum(p.X)
    rho = endo_spectrum(p.A.coeffs[0])
    if enumerate_resonances(mu, rho, lam) is not None:
        raise ResonantProblemError(
            f"lambda = {lam:g} is resonant; the decaying solution is not "
            "unique, use the order-by-order solver's family instead")

    A_p = np.asarray(f.A_eval(f.source), dtype=float) - lam * np.eye(f.m)
    mu_star = float(np.min(np.linalg.eigvals(A_p).real))
    nu = float(np.min(mu.real))

    if mu_star > 1e-12:
        I, tail, horizon, rate = _tail_integrate(_shifted(f, lam), y, cfg)
        return EvaluationResult(u=I, tail_estimate=tail, horizon=horizon,
                                rate=rate, mode="direct", split_order=None)

    # split mode: peel off the polynomial head to order N
    if cfg.split_order is not None:
        N = int(cfg.split_order)
        if N < 1:
            raise ValidationError("split_order must be at least 1")
        if mu_star + N * nu <= 0:
            raise ValidationError(
                f"split_order {N} cannot decay: min Re spec(A(p) - lam) + "
                f"N nu = {mu_star + N * nu:.3e} <= 0")
    else:
        N = max(1, math.floor((0.05 * nu - mu_star) / nu) + 1)
    if N > MAX_ORDER:
        raise ValidationError(
            f"splitting needs head order {N}, beyond the solver cap")
    if not f.polynomial and p.N < N:
        raise ValidationError(
            f"jet data of order {p.N} cannot support a split at order {N}; "
            "supply deeper jets or polynomial samplers")

    sol = solve_to_order(p, N)
    if not sol.solvable:
        raise ResonantProblemError(
            "head solve is obstructed; no decaying solution exists")
    u_head = sol.particular

    if f.polynomial:
        # The fields are exactly the jet polynomials, so the remainder is a
        # polynomial too.  Computing it once in the jet algebra at the full
        # product order and zeroing the head degrees (pure solver round-off
        # there) avoids the cancellation noise a pointwise difference of
        # O(1) terms would leave; that noise would stop decaying along the
        # trajectory and stall the tail criterion.
        D = p.N + N
        r_jet = -residual(p.at_order(D), u_head.extend(D))
        coeffs = np.array(r_jet.coeffs)
        coeffs[:degree_starts(p.n, D)[N + 1]] = 0.0
        r_poly = Jet(p.n, D, coeffs)
        v_remainder = lambda q: np.asarray(r_poly.evaluate(q), dtype=float)
    else:
        grads = [u_head.partial(i) for i in range(f.n)]
        A_orig, v_orig, X_orig = f.A_eval, f.v_eval, f.X_eval
        m = f.m

        def v_remainder(q):
            Xq = np.asarray(X_orig(q), dtype=float)
            Aq = np.asarray(A_orig(q), dtype=float) - lam * np.eye(m)
            uq = np.asarray(u_head.evaluate(q), dtype=float)
            du = sum(Xq[i] * np.asarray(g.evaluate(q), dtype=float)
                     for i, g in enumerate(grads))
            return np.asarray(v_orig(q), dtype=float) - du - Aq @ uq

    f_rem = replace(_shifted(f, lam), v_eval=v_remainder,
                    consistent_jets=None, polynomial=False)
    I, tail, horizon, rate = _tail_integrate(f_rem, y, cfg)
    u = np.asarray(u_head.evaluate(y), dtype=float) + I
    return EvaluationResult(u=u, tail_estimate=tail, horizon=horizon,
                            rate=rate, mode="split", split_order=N)


def empirical_decay_rate(f: FieldSampler, y, quantity="flow", *,
                         horizon: float = 30.0,
                         window_fraction: float = 0.3,
                         n_samples: int = 60,
                         rel_tol: float = 1e-9,
                         abs_tol: float = 1e-280) -> float:
    """Fitted exponential rate of a quantity along the backward flow.

    quantity is "flow" (distance of y_t to the source), "transition"
    (spectral norm of Finv), or a callable FlowState -> float.  The rate
    is the least-squares slope of its log against t over the tail window,
    so a positive value means decay as t goes to -inf.

    The fit needs relative accuracy of quantities spanning many decades,
    so the default absolute tolerance is essentially zero and the error
    control is purely relative; raise abs_tol only for states with
    components that cross zero.
    """
    if quantity == "flow":
        qfun = lambda st: float(np.linalg.norm(st.y_t - f.source))
    elif quantity == "transition":
        qfun = lambda st: float(np.linalg.norm(st.Finv, 2))
    elif callable(quantity):
        qfun = quantity
    else:
        raise ValidationError(
            "quantity must be 'flow', 'transition', or a callable")
    traj = integrate_flow(f, y, -horizon, rel_tol=rel_tol, abs_tol=abs_tol,
                          first_step=min(1e-3, 0.01 * horizon))
    ts = np.linspace(-horizon, -horizon * (1.0 - window_fraction), n_samples)
    vals = np.array([qfun(traj.at(t)) for t in ts])
    if np.any(vals < _UNDERFLOW):
        raise QuantityUnderflowError(
            "quantity underflowed inside the fitting window; shorten the "
            "horizon")
    return _fit_rate(ts, vals)
