"""Classification criteria: one operation per certificate family.

Every classifier returns a :class:`Classification` whose certificate carries
the numbers needed to re-check the verdict independently (invariant measure,
averaged drift, minor sequences, resolvent pairs, feasible vectors).  Sign
tests use a relative tolerance band; verdicts inside the band come back
inconclusive rather than manufactured, with one deliberate exception: the
1-d power-drift dichotomy, whose boundary genuinely belongs to the recurrent
side.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ChainNotRecurrent, NonConvergent, NotSolvable, SingularSolve
from .markov import (
    BetaSequence,
    Partition,
    QMatrix,
    TailHomogeneousChain,
    coarsen,
    invariant_measure,
)
from .mmatrix import MMatrixCertificate, is_nonsingular_mmatrix, upper_ones
from .simplex import feasible_point

SIGN_TOL = 1e-10


class Verdict(str, enum.Enum):
    RECURRENT = "recurrent"
    TRANSIENT = "transient"
    EXPONENTIALLY_ERGODIC = "exponentially-ergodic"
    INCONCLUSIVE = "inconclusive"


class Limit(str, enum.Enum):
    """Limit behaviour of the measuring function at infinity."""

    TO_INFINITY = "to-infinity"
    TO_ZERO = "to-zero"


@dataclass(frozen=True, eq=False)
class LyapunovBehavior:
    """What the caller's measuring function V does: its limit tag and the
    per-regime bounds beta_i with L_i V <= beta_i V outside radius r0.

    V itself stays on the caller's side; only (beta, tag) enter computation.
    """

    tag: Limit
    beta: np.ndarray
    r0: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).ravel())
        if not np.isfinite(self.beta).all():
            raise ValueError("beta must be finite")
        if self.r0 is not None and not self.r0 > 0:
            raise ValueError("r0 must be positive when given")


@dataclass(frozen=True, eq=False)
class TwoFunctionData:
    """Two-function data: beta_i with L_i h <= beta_i g and the limit of h."""

    beta: np.ndarray
    h_limit: Limit

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).ravel())
        if not np.isfinite(self.beta).all():
            raise ValueError("beta must be finite")


@dataclass(frozen=True, eq=False)
class FredholmPair:
    """kappa > 0 and xi solving Q xi = -kappa 1 - beta, pinned by sum(mu xi) = 0."""

    kappa: float
    xi: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class Classification:
    verdict: Verdict
    criterion: str
    certificate: dict = field(default_factory=dict)
    reason: Optional[str] = None

    @property
    def conclusive(self) -> bool:
        return self.verdict is not Verdict.INCONCLUSIVE

    def to_dict(self) -> dict:
        from ._util import jsonify

        out = {"verdict": self.verdict.value, "criterion": self.criterion,
               "certificate": jsonify(self.certificate)}
        if self.reason is not None:
            out["reason"] = self.reason
        return out


def _sign_tol(vec: np.ndarray) -> float:
    return SIGN_TOL * max(1.0, float(np.abs(vec).max()))


def _mmatrix_cert_dict(cert: MMatrixCertificate) -> dict:
    return {
        "verdict": cert.verdict,
        "z_pattern_ok": cert.z_pattern_ok,
        "minors": cert.minors,
        "positive_vector": cert.positive_vector,
        "eigen_witness": cert.eigen_witness,
        "boundary": cert.boundary,
    }


# ---------------------------------------------------------------------------
# averaged-drift and M-matrix criteria (common measuring function V)
# ---------------------------------------------------------------------------

def classify_avg(q: QMatrix, lyap: LyapunovBehavior) -> Classification:
    """Averaged-drift test: sum(mu_i beta_i) < 0 certifies the V-limit verdict.

    V -> infinity gives exponential ergodicity, V -> 0 gives transience; a
    nonnegative average is inconclusive for this test.
    """
    mu = invariant_measure(q)
    s = float(mu @ lyap.beta)
    tol = _sign_tol(lyap.beta)
    cert = {"mu": mu, "mu_beta": s, "tol": tol}
    if s < -tol:
        verdict = (Verdict.EXPONENTIALLY_ERGODIC if lyap.tag is Limit.TO_INFINITY
                   else Verdict.TRANSIENT)
        return Classification(verdict, "thm21", cert)
    return Classification(Verdict.INCONCLUSIVE, "thm21", cert,
                          reason=f"averaged drift {s:.6g} is not negative beyond tolerance")


def classify_mmatrix(q: QMatrix, lyap: LyapunovBehavior) -> Classification:
    """M-matrix test on -(Q + diag beta); conclusion follows the V-limit tag."""
    a = -(q.entries + np.diag(lyap.beta))
    cert = is_nonsingular_mmatrix(a)
    payload = {"matrix": a, "mmatrix": _mmatrix_cert_dict(cert)}
    if cert.verdict and not cert.boundary:
        verdict = (Verdict.EXPONENTIALLY_ERGODIC if lyap.tag is Limit.TO_INFINITY
                   else Verdict.TRANSIENT)
        return Classification(verdict, "thm22", payload)
    reason = ("verdict sits on the singularity boundary" if cert.boundary
              else "matrix is not a nonsingular M-matrix (the test is sufficient only)")
    return Classification(Verdict.INCONCLUSIVE, "thm22", payload, reason=reason)


def classify_state_dependent(q_tilde: QMatrix, lyap: LyapunovBehavior) -> Classification:
    """State-dependent variant: test -(Q~ + diag beta) H_N instead.

    H_N encodes the decreasing weight vector the bounding generator Q~ needs;
    the transformed matrix usually leaves the Z pattern, and the positive
    minors condition is the operative test (see mmatrix module).
    """
    n = q_tilde.n
    a = -(q_tilde.entries + np.diag(lyap.beta)) @ upper_ones(n)
    cert = is_nonsingular_mmatrix(a)
    payload = {
        "matrix": a,
        "mmatrix": _mmatrix_cert_dict(cert),
        "conclusion_strength": "exponentially-ergodic (implies recurrent); some "
                               "statements of this test claim only recurrence",
    }
    if cert.verdict and not cert.boundary:
        verdict = (Verdict.EXPONENTIALLY_ERGODIC if lyap.tag is Limit.TO_INFINITY
                   else Verdict.TRANSIENT)
        return Classification(verdict, "thm23", payload)
    reason = ("verdict sits on the singularity boundary" if cert.boundary
              else "transformed matrix fails the positive-minors test")
    return Classification(Verdict.INCONCLUSIVE, "thm23", payload, reason=reason)


def classify_coarse(beta_f, q_f, tag: Limit) -> Classification:
    """Finite-partition test on precomputed class data (beta^F, Q^F).

    Tests -(diag beta^F + Q^F) H_m.  The conclusion is deliberately weaker
    than the finite-space tests: V -> infinity certifies recurrence only.
    """
    bf = np.asarray(beta_f, dtype=float).ravel()
    qf = np.asarray(q_f, dtype=float)
    m = bf.size
    if qf.shape != (m, m):
        raise ValueError("class generator shape must match beta^F")
    a = -(np.diag(bf) + qf) @ upper_ones(m)
    cert = is_nonsingular_mmatrix(a)
    payload = {"beta_f": bf, "q_f": qf, "matrix": a, "mmatrix": _mmatrix_cert_dict(cert)}
    if cert.verdict and not cert.boundary:
        verdict = Verdict.RECURRENT if tag is Limit.TO_INFINITY else Verdict.TRANSIENT
        return Classification(verdict, "thm24", payload)
    reason = ("verdict sits on the singularity boundary" if cert.boundary
              else "coarsened matrix fails the positive-minors test")
    return Classification(Verdict.INCONCLUSIVE, "thm24", payload, reason=reason)


def classify_infinite(chain: TailHomogeneousChain, beta: BetaSequence,
                      partition: Partition, tag: Limit) -> Classification:
    """Finite-partition test for an infinite birth-death regime space.

    Requires the switching chain itself to be recurrent (tail down-rate at
    least the up-rate); coarsens onto the partition classes and delegates to
    :func:`classify_coarse`.
    """
    if not chain.is_recurrent():
        raise ChainNotRecurrent(
            f"tail rates up={chain.tail_up:g} > down={chain.tail_down:g}: the switching "
            "chain is transient, the partition criterion does not apply")
    beta_f, q_f = coarsen(chain, beta, partition)
    out = classify_coarse(beta_f, q_f, tag)
    out.certificate["partition"] = partition.classes
    out.certificate["chain_recurrent"] = True
    return out


def classify_ou(q: QMatrix, b) -> Classification:
    """Linear-drift (Ornstein-Uhlenbeck type) criterion from the sign of sum(mu_i b_i).

    Negative average: exponentially ergodic.  Positive: transient.  The zero
    boundary is left open here.
    """
    bv = np.asarray(b, dtype=float).ravel()
    mu = invariant_measure(q)
    s = float(mu @ bv)
    tol = _sign_tol(bv)
    cert = {"mu": mu, "mu_b": s, "tol": tol}
    if s < -tol:
        return Classification(Verdict.EXPONENTIALLY_ERGODIC, "prop22", cert)
    if s > tol:
        return Classification(Verdict.TRANSIENT, "prop22", cert)
    return Classification(Verdict.INCONCLUSIVE, "prop22", cert,
                          reason="averaged linear drift vanishes; the linear boundary "
                                 "case is outside this test")


# ---------------------------------------------------------------------------
# two-function (h, g) criteria
# ---------------------------------------------------------------------------

def _pinned_solve(q: QMatrix, mu: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve Q xi = rhs with the normalisation sum(mu xi) = 0.

    rhs must be mu-orthogonal for solvability; the last row of Q is replaced
    by mu, which keeps the system square and nonsingular.
    """
    m = q.entries.copy()
    m[-1, :] = mu
    b = rhs.copy()
    b[-1] = 0.0
    try:
        xi = np.linalg.solve(m, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(f"pinned resolvent solve failed: {exc}") from None
    return xi


def fredholm_solve(q: QMatrix, beta) -> FredholmPair:
    """kappa = -sum(mu beta) and xi with Q xi = -kappa 1 - beta.

    Solvable exactly when the averaged drift is nonpositive (kappa >= 0); the
    solution is pinned by sum(mu xi) = 0 and the residual is checked against
    1e-9 of the data scale.
    """
    b = np.asarray(beta, dtype=float).ravel()
    if b.shape != (q.n,):
        raise ValueError("beta length must match the number of regimes")
    mu = invariant_measure(q)
    s = float(mu @ b)
    tol = _sign_tol(b)
    if s > tol:
        raise NotSolvable(f"averaged drift {s:.6g} is positive; no resolvent pair")
    kappa = -s
    xi = _pinned_solve(q, mu, -kappa - b)
    scale = q.scale() + float(np.abs(b).max())
    residual = float(np.abs(q.entries @ xi + kappa + b).max())
    if residual > 1e-9 * max(scale, 1e-300):
        raise SingularSolve(f"resolvent residual {residual:g} exceeds tolerance")
    xi.setflags(write=False)
    return FredholmPair(kappa=kappa, xi=xi, residual=residual)


def classify_two_function(q: QMatrix, data: TwoFunctionData) -> Classification:
    """Two-function test: negative averaged beta certifies the h-limit verdict.

    h -> infinity gives recurrence, h -> 0 transience; the certificate is the
    resolvent pair (kappa, xi).
    """
    mu = invariant_measure(q)
    s = float(mu @ data.beta)
    tol = _sign_tol(data.beta)
    if s < -tol:
        pair = fredholm_solve(q, data.beta)
        cert = {"mu": mu, "mu_beta": s,
                "fredholm": {"kappa": pair.kappa, "xi": pair.xi, "residual": pair.residual}}
        verdict = Verdict.RECURRENT if data.h_limit is Limit.TO_INFINITY else Verdict.TRANSIENT
        return Classification(verdict, "thm31", cert)
    return Classification(Verdict.INCONCLUSIVE, "thm31", {"mu": mu, "mu_beta": s},
                          reason="averaged beta is not negative; for 1-d power drift the "
                                 "boundary is settled by the cor31 classifier")


def classify_two_function_state_dependent(q_tilde: QMatrix, beta, h_limit: Limit) -> Classification:
    """State-dependent two-function test via a nonincreasing weight eta.

    Searches for eta_1 >= ... >= eta_n >= 1 with beta_i + (Q~ eta)_i <= -1
    componentwise (the strict inequalities are scale-invariant, so the unit
    slack loses nothing).  Feasible eta certifies the h-limit verdict.
    """
    b = np.asarray(beta, dtype=float).ravel()
    n = q_tilde.n
    if b.shape != (n,):
        raise ValueError("beta length must match the number of regimes")
    rows = []
    rhs = []
    for i in range(n - 1):
        r = np.zeros(n)
        r[i + 1], r[i] = 1.0, -1.0  # eta_{i+1} <= eta_i
        rows.append(r)
        rhs.append(0.0)
    last = np.zeros(n)
    last[n - 1] = -1.0  # eta_n >= 1
    rows.append(last)
    rhs.append(-1.0)
    rows.append(q_tilde.entries)  # (Q~ eta)_i <= -1 - beta_i
    rhs.extend((-1.0 - b).tolist())
    a_ub = np.vstack([np.atleast_2d(r) for r in rows])
    eta = feasible_point(a_ub, np.asarray(rhs))
    if eta is None:
        return Classification(Verdict.INCONCLUSIVE, "thm32", {"beta": b},
                              reason="no nonincreasing positive eta satisfies "
                                     "beta + Q~ eta << 0")
    verdict = Verdict.RECURRENT if h_limit is Limit.TO_INFINITY else Verdict.TRANSIENT
    return Classification(verdict, "thm32", {"beta": b, "eta": eta})


# ---------------------------------------------------------------------------
# radial profiles and the 1-d power-drift dichotomy
# ---------------------------------------------------------------------------

def sphere_grid(dim: int, points: int = 1024) -> np.ndarray:
    """Deterministic grid of unit vectors: exact for dim 1, angular for dim 2,
    seeded quasi-uniform for higher dimensions."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
        return np.column_stack([np.cos(th), np.sin(th)])
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((points, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def radial_beta(drift_profile: Callable, n_regimes: int, delta: float,
                mode: str = "limsup", *, dim: Optional[int] = None,
                grid: Optional[np.ndarray] = None,
                a_profile: Optional[Callable] = None,
                radii: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-regime radial drift bound over the sphere.

    For delta in (-1, 1) the radial component b^(phi, i) . phi depends on the
    direction only, so limsup/liminf at infinity reduce to a max/min over the
    sphere grid.  For delta = -1 the diffusion terms
    tr(a)/2 - phi' a phi / 2 enter as well; they are evaluated along the
    ``radii`` schedule and the last two radii must agree to 1e-6 or
    NonConvergent is raised.

    ``drift_profile(phis, i)`` maps an (m, d) array of unit vectors to the
    (m, d) drift directions; ``a_profile(xs, i)`` maps (m, d) positions to
    (m, d, d) diffusion matrices (a constant (d, d) matrix also works).
    """
    if mode not in ("limsup", "liminf"):
        raise ValueError("mode must be 'limsup' or 'liminf'")
    if not -1.0 <= delta < 1.0:
        raise ValueError("delta must lie in [-1, 1)")
    if grid is None:
        if dim is None:
            raise ValueError("pass dim or an explicit sphere grid")
        grid = sphere_grid(dim)
    phis = np.asarray(grid, dtype=float)
    phis = phis / np.linalg.norm(phis, axis=1, keepdims=True)
    reduce = np.max if mode == "limsup" else np.min

    def radial_part(i: int) -> np.ndarray:
        bhat = np.asarray(drift_profile(phis, i), dtype=float)
        return np.einsum("md,md->m", bhat, phis)

    if delta > -1.0:
        out = np.array([reduce(radial_part(i)) for i in range(n_regimes)])
    else:
        if a_profile is None:
            raise ValueError("delta = -1 needs the diffusion profile")
        if radii is None:
            radii = np.geomspace(1e3, 1e9, 13)
        radii = np.asarray(radii, dtype=float)

        def level(i: int, r: float) -> float:
            xs = r * phis
            a = np.asarray(a_profile(xs, i), dtype=float)
            if a.ndim == 2:
                a = np.broadcast_to(a, (phis.shape[0],) + a.shape)
            tr = np.trace(a, axis1=1, axis2=2)
            quad = np.einsum("md,mde,me->m", phis, a, phis)
            return float(reduce(0.5 * tr - 0.5 * quad + radial_part(i)))

        out = np.empty(n_regimes)
        for i in range(n_regimes):
            prev, last = level(i, radii[-2]), level(i, radii[-1])
            if abs(last - prev) > 1e-6 * max(1.0, abs(last)):
                raise NonConvergent(
                    f"regime {i}: radial level moved from {prev:g} to {last:g} at the "
                    "largest radii; extend the schedule")
            out[i] = last
    if not np.isfinite(out).all():
        raise NonConvergent("radial bound is not finite")
    return out


def _radial_verdict(q: QMatrix, beta_up: np.ndarray, beta_lo: np.ndarray,
                    extra_cert: dict) -> Classification:
    mu = invariant_measure(q)
    s_up = float(mu @ beta_up)
    s_lo = float(mu @ beta_lo)
    tol = SIGN_TOL * max(1.0, float(np.abs(beta_up).max()), float(np.abs(beta_lo).max()))
    cert = {"mu": mu, "beta": beta_up, "beta_tilde": beta_lo,
            "mu_beta": s_up, "mu_beta_tilde": s_lo, **extra_cert}
    if s_up < -tol:
        return Classification(Verdict.RECURRENT, "thm33", cert)
    if s_lo > tol:
        return Classification(Verdict.TRANSIENT, "thm33", cert)
    return Classification(Verdict.INCONCLUSIVE, "thm33", cert,
                          reason="averaged radial bounds straddle zero (criterion gap)")


def classify_radial(q: QMatrix, drift_profile: Callable, delta: float, *,
                    dim: int, a_profile: Optional[Callable] = None,
                    grid: Optional[np.ndarray] = None,
                    radii: Optional[np.ndarray] = None) -> Classification:
    """Radial criterion: recurrent when the averaged limsup bound is negative,
    transient when the averaged liminf bound is positive."""
    common = dict(dim=dim, grid=grid, a_profile=a_profile, radii=radii)
    beta_up = radial_beta(drift_profile, q.n, delta, "limsup", **common)
    beta_lo = radial_beta(drift_profile, q.n, delta, "liminf", **common)
    return _radial_verdict(q, beta_up, beta_lo, {"delta": delta})


def classify_radial_sampled(q: QMatrix, radial_samples, delta: float) -> Classification:
    """Radial criterion from precomputed samples of b^(phi, i) . phi,
    shaped (n_directions, n_regimes)."""
    s = np.asarray(radial_samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != q.n:
        raise ValueError("samples must be (n_directions, n_regimes)")
    return _radial_verdict(q, s.max(axis=0), s.min(axis=0), {"delta": delta})


def classify_power_1d(q: QMatrix, b, sigma, delta: float) -> Classification:
    """Complete dichotomy for 1-d power drift b_i x^delta with reflecting zero.

    For delta in [-1, 1) the process is recurrent exactly when
    sum(mu_i b_i) <= 0 (boundary included), transient otherwise; this test is
    total, never inconclusive.  At the boundary the certificate additionally
    records the strictly negative proof-side quantity
    sum(mu_i b_i (Q^-1 b)_i).  delta = 1 is the linear case and is delegated
    to :func:`classify_ou`.
    """
    bv = np.asarray(b, dtype=float).ravel()
    sv = np.asarray(sigma, dtype=float).ravel()
    if bv.shape != (q.n,):
        raise ValueError("b length must match the number of regimes")
    if sv.size not in (1, q.n):
        raise ValueError("sigma must be scalar or per-regime")
    if np.abs(sv).min() == 0:
        raise ValueError("sigma entries must be nonzero")
    if not -1.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [-1, 1]")
    if delta == 1.0:
        out = classify_ou(q, bv)
        out.certificate["delegated_from"] = "cor31"
        return out

    mu = invariant_measure(q)
    s = float(mu @ bv)
    tol = _sign_tol(bv)
    cert = {"mu": mu, "mu_b": s, "delta": delta, "tol": tol}
    if s <= tol:
        if abs(s) <= tol and float(np.abs(bv).max()) > tol:
            w = _pinned_solve(q, mu, bv.copy())
            cert["boundary_certificate"] = {
                "w": w, "mu_b_w": float(np.sum(mu * bv * w))}
        return Classification(Verdict.RECURRENT, "cor31", cert)
    return Classification(Verdict.TRANSIENT, "cor31", cert)


# ---------------------------------------------------------------------------
# closed-form thresholds for the built-in birth-death benchmark
# ---------------------------------------------------------------------------

def kappa_thresholds(a: float, b: float) -> tuple:
    """Closed-form drift thresholds for the two-class birth-death benchmark
    with down-rate ``a`` and up-rate ``b`` (requires a >= b > 0).

    Returns ``(kappa_rec, kappa_trans)``: drift slopes below/above which the
    two-class partition certificate proves recurrence/transience.
    """
    if not (a >= b > 0):
        raise ValueError("need a >= b > 0")
    s = a + b + 1.0
    kappa_rec = (s - np.sqrt(s * s - 4.0 * a)) / 2.0
    if 2.0 * a * b <= 1.0 - b:
        kappa_trans = 1.0 - b
    else:
        t = a + b - 1.0
        kappa_trans = (1.0 - b - a + np.sqrt(t * t + 4.0 * a + 2.0 * b - 2.0)) / 2.0
    return float(kappa_rec), float(kappa_trans)


def bisect_verdict(fn: Callable[[float], bool], lo: float, hi: float,
                   tol: float = 1e-9, max_iter: int = 200) -> float:
    """Bisect the flip point of a boolean-valued function of one parameter."""
    flo, fhi = fn(lo), fn(hi)
    if flo == fhi:
        raise ValueError("verdict does not flip on the bracket")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if fn(mid) == flo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
