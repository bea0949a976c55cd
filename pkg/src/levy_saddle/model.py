"""Phase-type spectrally one-sided Levy models.

The driving process is ``X_t = delta*t + sigma*B_t - sum_{n<=N_t} Z_n`` with
``Z_n`` i.i.d. phase-type and ``N`` a Poisson process of rate ``kappa``.  For
the spectrally positive side the same parameters describe the dual ``-X``, so
all analytic quantities below (Laplace exponent, roots, scale functions) refer
to the spectrally negative representative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import mpmath
import numpy as np
from scipy.linalg import expm as _expm

from .errors import DomainError, RepeatedRoots, SingularResolvent

# Condition number above which the resolvent solve is refused.
RESOLVENT_COND_LIMIT = 1e14
# Minimum separation below which the exponential-sum scale function breaks down.
ROOT_MIN_SEPARATION = 1e-7
# Largest tolerated positive row sum of T (matrices printed to few decimals).
ROWSUM_SLACK = 1e-3


class Side(Enum):
    SPECTRALLY_NEGATIVE = "SN"
    SPECTRALLY_POSITIVE = "SP"


def matrix_exp(A: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring Pade); exp(0) == I exactly."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("matrix_exp expects a square matrix")
    if not np.isfinite(A).all():
        raise DomainError("matrix_exp expects finite entries")
    return _expm(A)


@dataclass(frozen=True)
class PhaseTypeDist:
    """Phase-type distribution (m, alpha_vec, T) with exit vector t = -T 1.

    Sub-generators whose printed entries give row sums that are positive by at
    most ``ROWSUM_SLACK * max|T_ii|`` are repaired by folding the excess into
    the diagonal; anything worse is rejected.
    """

    alpha_vec: np.ndarray
    T: np.ndarray
    t_vec: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha_vec, dtype=float).reshape(-1)
        T = np.array(self.T, dtype=float)
        m = alpha.size
        if T.shape != (m, m):
            raise ValueError(f"T must be {m}x{m}, got {T.shape}")
        if np.any(alpha < -1e-12):
            raise ValueError("alpha_vec entries must be nonnegative")
        alpha = np.maximum(alpha, 0.0)
        if abs(alpha.sum() - 1.0) > 1e-12:
            raise ValueError("alpha_vec must sum to 1")
        off = T - np.diag(np.diag(T))
        if np.any(off < -1e-12):
            raise ValueError("T must have nonnegative off-diagonal entries")
        np.fill_diagonal(off, 0.0)
        off = np.maximum(off, 0.0)
        T = off + np.diag(np.diag(T))
        diag = np.diag(T)
        if np.any(diag >= 0.0):
            raise ValueError("T must have strictly negative diagonal entries")
        rowsum = T.sum(axis=1)
        excess = np.maximum(rowsum, 0.0)
        if np.any(excess > ROWSUM_SLACK * np.max(np.abs(diag))):
            raise ValueError("T row sums exceed zero by more than the repair slack")
        T[np.diag_indices_from(T)] -= excess
        t = np.maximum(-T.sum(axis=1), 0.0)
        ev = np.linalg.eigvals(T)
        if np.max(ev.real) >= -1e-12:
            raise ValueError("all eigenvalues of T must have negative real part")
        object.__setattr__(self, "alpha_vec", alpha)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "t_vec", t)

    @property
    def m(self) -> int:
        return self.alpha_vec.size

    def mean(self) -> float:
        """E[Z] = alpha (-T)^{-1} 1."""
        return float(self.alpha_vec @ np.linalg.solve(-self.T, np.ones(self.m)))


def phase_density(jumps: PhaseTypeDist, z: float) -> float:
    """Density alpha exp(Tz) t of the phase-type law at z >= 0."""
    if z < 0.0:
        raise DomainError("phase_density is defined on z >= 0")
    return float(jumps.alpha_vec @ matrix_exp(jumps.T * z) @ jumps.t_vec)


def phase_survival(jumps: PhaseTypeDist, z: float) -> float:
    """Tail probability P(Z > z) = alpha exp(Tz) 1."""
    if z < 0.0:
        return 1.0
    return float(jumps.alpha_vec @ matrix_exp(jumps.T * z) @ np.ones(jumps.m))


def phase_tail_cutoff(jumps: PhaseTypeDist, eps: float = 1e-12) -> float:
    """Smallest z (up to bisection accuracy) with P(Z > z) <= eps."""
    hi = 1.0
    while phase_survival(jumps, hi) > eps:
        hi *= 2.0
        if hi > 1e9:
            raise ArithmeticError("phase-type tail does not decay")
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if phase_survival(jumps, mid) > eps:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class LevyModelSpec:
    """Model parameters plus the discount rate of the game."""

    side: Side
    sigma: float
    delta: float
    kappa: float
    jumps: PhaseTypeDist
    q: float

    def __post_init__(self):
        if self.q <= 0.0:
            raise ValueError("discount rate q must be positive")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.kappa <= 0.0:
            raise ValueError("jump rate kappa must be positive")
        # monotone paths are excluded: bounded variation needs positive drift
        if self.sigma == 0.0 and self.delta <= 0.0:
            raise ValueError("delta must be positive when sigma = 0")

    @property
    def is_bounded_variation(self) -> bool:
        return self.sigma == 0.0


def laplace_exponent(model: LevyModelSpec, s: complex) -> complex:
    """psi(s) = delta*s + sigma^2 s^2 / 2 + kappa (alpha (sI-T)^{-1} t - 1)."""
    jumps = model.jumps
    s = complex(s)
    if s.imag == 0.0:
        M = s.real * np.eye(jumps.m) - jumps.T
    else:
        M = s * np.eye(jumps.m, dtype=complex) - jumps.T
    if np.linalg.cond(M) > RESOLVENT_COND_LIMIT:
        raise SingularResolvent(f"sI - T is numerically singular at s = {s}")
    resolv = jumps.alpha_vec @ np.linalg.solve(M, jumps.t_vec)
    val = model.delta * s + 0.5 * model.sigma**2 * s * s + model.kappa * (resolv - 1.0)
    return complex(val)


def laplace_exponent_prime(model: LevyModelSpec, s: complex) -> complex:
    """psi'(s) = delta + sigma^2 s - kappa alpha (sI-T)^{-2} t."""
    jumps = model.jumps
    s = complex(s)
    if s.imag == 0.0:
        M = s.real * np.eye(jumps.m) - jumps.T
    else:
        M = s * np.eye(jumps.m, dtype=complex) - jumps.T
    if np.linalg.cond(M) > RESOLVENT_COND_LIMIT:
        raise SingularResolvent(f"sI - T is numerically singular at s = {s}")
    r = np.linalg.solve(M, np.linalg.solve(M, jumps.t_vec))
    val = model.delta + model.sigma**2 * s - model.kappa * (jumps.alpha_vec @ r)
    return complex(val)


def mean_drift(model: LevyModelSpec) -> float:
    """psi'(0+) = delta - kappa E[Z], the mean of the SN representative."""
    return model.delta - model.kappa * model.jumps.mean()


@dataclass(frozen=True)
class RootSet:
    """Roots of psi(s) = q: the positive root and the negative-real-part ones.

    ``xi`` holds the negated left-half-plane roots (so Re xi_i > 0) and
    ``coeffs`` the residues C_i = -1/psi'(-xi_i) of 1/(q - psi) at -xi_i.
    """

    phi_q: float
    psi_prime_at_phi: float
    xi: np.ndarray
    coeffs: np.ndarray


def _phi_bisect(model: LevyModelSpec, q: float, tol: float = 1e-12) -> float:
    # psi(0) = 0 < q and psi is convex, so the bracket [0, hi] is guaranteed
    hi = 1.0
    while laplace_exponent(model, hi).real <= q:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("failed to bracket the positive root of psi = q")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if laplace_exponent(model, mid).real > q:
            hi = mid
        else:
            lo = mid
    phi = 0.5 * (lo + hi)
    # two Newton steps sharpen the bisection estimate to machine accuracy
    for _ in range(2):
        f = laplace_exponent(model, phi).real - q
        fp = laplace_exponent_prime(model, phi).real
        phi -= f / fp
    return phi


def _interp_polynomial(model: LevyModelSpec, degree: int) -> np.ndarray:
    """Coefficients (ascending) of (psi(s) - q) det(sI - T), by interpolation.

    Samples and the Vandermonde solve run in 40-digit arithmetic; the result
    is rounded to complex128 for the root iteration.
    """
    jumps = model.jumps
    m = jumps.m
    ev = np.linalg.eigvals(jumps.T)
    real_ev = [e.real for e in ev if abs(e.imag) < 1e-9]
    nodes: list[int] = []
    k = 0
    while len(nodes) < degree + 1:
        for cand in ((0,) if k == 0 else (k, -k)):
            if all(abs(cand - e) > 0.4 for e in real_ev):
                nodes.append(cand)
            if len(nodes) == degree + 1:
                break
        k += 1
    with mpmath.workdps(40):
        Tm = mpmath.matrix(jumps.T.tolist())
        tm = mpmath.matrix(jumps.t_vec.tolist())
        am = mpmath.matrix([jumps.alpha_vec.tolist()])
        eye = mpmath.eye(m)
        half_sig2 = mpmath.mpf(repr(0.5 * model.sigma**2))
        delta = mpmath.mpf(repr(model.delta))
        kappa = mpmath.mpf(repr(model.kappa))
        q = mpmath.mpf(repr(model.q))
        V = mpmath.matrix(degree + 1, degree + 1)
        rhs = mpmath.matrix(degree + 1, 1)
        for i, node in enumerate(nodes):
            s = mpmath.mpf(node)
            M = s * eye - Tm
            psi_val = delta * s + half_sig2 * s * s + kappa * ((am * mpmath.lu_solve(M, tm))[0] - 1)
            rhs[i] = (psi_val - q) * mpmath.det(M)
            p = mpmath.mpf(1)
            for j in range(degree + 1):
                V[i, j] = p
                p *= s
        coeffs = mpmath.lu_solve(V, rhs)
    return np.array([complex(coeffs[j]) for j in range(degree + 1)])


def _aberth(coeffs_ascending: np.ndarray) -> np.ndarray:
    """Simultaneous (Aberth-Ehrlich) iteration for all roots of a polynomial."""
    c = coeffs_ascending / coeffs_ascending[-1]
    d = len(c) - 1
    cd = c[::-1]  # descending, monic
    radius = 1.0 + np.max(np.abs(c[:-1]))
    angles = 2.0 * np.pi * (np.arange(d) + 0.376) / d
    z = radius * np.exp(1j * angles)
    for _ in range(200):
        p = np.full(d, cd[0], dtype=complex)
        dp = np.zeros(d, dtype=complex)
        for ck in cd[1:]:
            dp = dp * z + p
            p = p * z + ck
        dp = np.where(dp == 0.0, 1e-300, dp)
        w = p / dp
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        s = (1.0 / diff).sum(axis=1)
        step = w / (1.0 - w * s)
        z = z - step
        if np.max(np.abs(step)) < 1e-13 * (1.0 + np.max(np.abs(z))):
            break
    return z


def find_roots(model: LevyModelSpec) -> RootSet:
    """Locate Phi(q) and the left-half-plane roots of psi(s) = q."""
    jumps = model.jumps
    m = jumps.m
    q = model.q
    ev = np.linalg.eigvals(jumps.T)
    evs = np.sort_complex(ev)
    for i in range(m - 1):
        if abs(evs[i + 1] - evs[i]) < 1e-8:
            raise RepeatedRoots("phase-type sub-generator has (near-)repeated eigenvalues")

    phi = _phi_bisect(model, q)
    if not phi > 0.0:
        raise AssertionError("positive root of psi = q must exist for q > 0")

    degree = m + 2 if model.sigma > 0.0 else m + 1
    poly = _interp_polynomial(model, degree)
    roots = _aberth(poly)

    # Newton on psi - q restores accuracy lost to interpolation
    for k in range(len(roots)):
        zk = roots[k]
        for _ in range(60):
            f = laplace_exponent(model, zk) - q
            fp = laplace_exponent_prime(model, zk)
            dz = f / fp
            zk = zk - dz
            if abs(dz) < 1e-15 * (1.0 + abs(zk)):
                break
        roots[k] = zk

    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < ROOT_MIN_SEPARATION:
                raise RepeatedRoots(
                    f"roots {roots[i]:.9f} and {roots[j]:.9f} closer than {ROOT_MIN_SEPARATION}"
                )

    neg = [r for r in roots if r.real < 0.0]
    pos = [r for r in roots if r.real >= 0.0]
    if len(pos) != 1 or abs(pos[0] - phi) > 1e-6 * (1.0 + phi):
        raise AssertionError("expected exactly one root on the positive axis, at Phi(q)")
    expected = m + 1 if model.sigma > 0.0 else m
    if len(neg) != expected:
        raise RepeatedRoots(f"expected {expected} left-half-plane roots, found {len(neg)}")

    # canonicalize: real roots made exactly real, conjugate pairs made exact
    xi = [-r for r in neg]
    cleaned: list[complex] = []
    used = [False] * len(xi)
    for i, r in enumerate(xi):
        if used[i]:
            continue
        if abs(r.imag) <= 1e-9 * (1.0 + abs(r.real)):
            cleaned.append(complex(r.real, 0.0))
            used[i] = True
            continue
        partner = None
        for j in range(i + 1, len(xi)):
            if not used[j] and abs(xi[j] - r.conjugate()) < 1e-6 * (1.0 + abs(r)):
                partner = j
                break
        if partner is None:
            raise RepeatedRoots("complex root without a conjugate partner")
        avg = 0.5 * (r + xi[partner].conjugate())
        base = complex(avg.real, abs(avg.imag))
        cleaned.extend([base, base.conjugate()])
        used[i] = used[partner] = True
    cleaned.sort(key=lambda zc: (zc.real, zc.imag))
    xi_arr = np.array(cleaned, dtype=complex)

    coeffs = np.empty_like(xi_arr)
    for i, x in enumerate(xi_arr):
        if x.imag < 0.0 and i > 0 and xi_arr[i - 1] == x.conjugate():
            coeffs[i] = coeffs[i - 1].conjugate()
        else:
            coeffs[i] = -1.0 / laplace_exponent_prime(model, -x)

    psi_prime_at_phi = laplace_exponent_prime(model, phi).real
    rs = RootSet(phi_q=phi, psi_prime_at_phi=psi_prime_at_phi, xi=xi_arr, coeffs=coeffs)
    _validate_roots(model, rs)
    return rs


def _validate_roots(model: LevyModelSpec, rs: RootSet) -> None:
    q = model.q
    if abs(laplace_exponent(model, rs.phi_q).real - q) > 1e-10 * max(1.0, abs(q)):
        raise ArithmeticError("psi(Phi(q)) deviates from q beyond tolerance")
    for x in rs.xi:
        if abs(laplace_exponent(model, -x) - q) > 1e-8:
            raise ArithmeticError(f"psi(-xi) deviates from q at xi = {x}")
    allr = np.concatenate(([rs.phi_q + 0j], -rs.xi))
    for i in range(len(allr)):
        for j in range(i + 1, len(allr)):
            if abs(allr[i] - allr[j]) < ROOT_MIN_SEPARATION:
                raise RepeatedRoots("root set contains a near-coincident pair")


def model_to_dict(model: LevyModelSpec) -> dict:
    return {
        "side": model.side.value,
        "sigma": model.sigma,
        "delta": model.delta,
        "kappa": model.kappa,
        "q": model.q,
        "phase_type": {
            "alpha": model.jumps.alpha_vec.tolist(),
            "T": model.jumps.T.tolist(),
        },
    }


def model_from_dict(doc: dict) -> LevyModelSpec:
    """Build a model from the JSON document schema used by the CLI."""
    try:
        side = Side(doc["side"])
        ph = doc["phase_type"]
        jumps = PhaseTypeDist(np.asarray(ph["alpha"], dtype=float), np.asarray(ph["T"], dtype=float))
        return LevyModelSpec(
            side=side,
            sigma=float(doc["sigma"]),
            delta=float(doc["delta"]),
            kappa=float(doc["kappa"]),
            jumps=jumps,
            q=float(doc["q"]),
        )
    except KeyError as exc:
        raise ValueError(f"model document missing field {exc}") from exc
