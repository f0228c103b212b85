"""Randomized and closed-form checks of the curvature-pinch inequalities.

Covers the spectral contraction bound behind the Ricci windows, the Nomizu inequality,
the Laplacian bounds for psi = g(A, A) and for the cubic maximum phi, the
root bound for differential inequalities and the resulting windows.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chart import StatStructure, orthonormal_frame
from .connection import (
    PointGeometry,
    PreconditionViolated,
    _geo,
    laplacian_scalar_at,
    psi_jet,
    structure_residuals,
)
from .curvature import (
    _bundle_from_geometry,
    conjugate_symmetry_report,
    coordinate_planes,
    curvature_bundle_at,
    random_planes,
    refine_sectional_extreme,
    sectional_values,
)
from .report import Check, VerificationReport

__all__ = [
    "CurvaturePinch",
    "InvalidPinch",
    "SpectrumSample",
    "InvalidSample",
    "InvalidCoefficients",
    "NotTraceFree",
    "NotUnit",
    "PositiveH3",
    "PositiveN",
    "crucial_pair",
    "crucial_pairs",
    "crucial_pair_contraction",
    "crucial_sweep",
    "random_spectrum",
    "random_trace_free_cubic",
    "to_frame",
    "F_tensor",
    "nomizu_gap",
    "nomizu_gaps",
    "nomizu_sweep",
    "empirical_pinch",
    "delta_psi_check",
    "a_prime_check",
    "laplacian_A_check",
    "largest_root",
    "psi_sup_bound",
    "psi_polynomial",
    "EmpiricalPinch",
    "bounds_windows",
    "bounds_windows_h1h2",
    "CubicMax",
    "max_cubic_direction",
    "maximizer_checks",
    "delta_phi_check",
    "cubic_sup_bound",
    "run_chunks",
]


class InvalidPinch(ValueError):
    pass


class InvalidSample(ValueError):
    pass


class InvalidCoefficients(ValueError):
    pass


class NotTraceFree(ValueError):
    pass


class NotUnit(ValueError):
    pass


class PositiveH3(ValueError):
    pass


class PositiveN(ValueError):
    pass


# ---------------------------------------------------------------------------
# pinch parameters


@dataclass(frozen=True)
class CurvaturePinch:
    """Sectional bounds H2 <= k <= H1 with eps = H1 - H2, H3 = H2 - (n-2)/2 eps."""

    n: int
    H1: float
    H2: float
    H3: float
    eps: float

    def __post_init__(self):
        if self.n < 2:
            raise InvalidPinch("dimension must be >= 2")
        tol = 1e-12 * (1.0 + abs(self.H1) + abs(self.H2) + abs(self.H3))
        if abs(self.eps - (self.H1 - self.H2)) > tol:
            raise InvalidPinch("eps must equal H1 - H2")
        if abs(self.H3 - (self.H2 - (self.n - 2) / 2 * self.eps)) > tol:
            raise InvalidPinch("H3 must equal H2 - (n-2)/2 eps")
        if self.eps < 0:
            raise InvalidPinch("eps must be non-negative")

    @classmethod
    def from_h3_eps(cls, n: int, h3: float, eps: float) -> "CurvaturePinch":
        h2 = h3 + (n - 2) / 2 * eps
        return cls(n, h2 + eps, h2, float(h3), float(eps))

    @classmethod
    def from_h1_h2(cls, n: int, h1: float, h2: float) -> "CurvaturePinch":
        eps = h1 - h2
        return cls(n, float(h1), float(h2), h2 - (n - 2) / 2 * eps, eps)

    @property
    def window(self) -> tuple[float, float]:
        """Admissible range of sectional values: [H3 + (n-2)/2 eps, H3 + n/2 eps]."""
        return (
            self.H3 + (self.n - 2) / 2 * self.eps,
            self.H3 + self.n / 2 * self.eps,
        )

    def require_nonpositive_h3(self) -> "CurvaturePinch":
        if self.H3 > 0:
            raise InvalidPinch(f"H3 = {self.H3} must be non-positive")
        if self.eps < 0:
            raise InvalidPinch("eps must be non-negative")
        return self


# ---------------------------------------------------------------------------
# chunked parallel sampling

DEFAULT_CHUNK = 8192


def run_chunks(
    total: int,
    seed: int,
    work: Callable[[np.random.Generator, int], object],
    threads: int | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> list:
    """Run ``work(rng, size)`` over fixed-size chunks of ``total`` samples.

    Each chunk draws from its own stream keyed by (seed, chunk index), so the
    merged results do not depend on how many threads execute them.
    """
    sizes = [min(chunk, total - start) for start in range(0, total, chunk)]

    def job(idx: int):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        return work(rng, sizes[idx])

    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(sizes) <= 1:
        return [job(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(len(sizes))))


# ---------------------------------------------------------------------------
# spectral contraction bound


@dataclass(frozen=True)
class SpectrumSample:
    """Eigenvalues of K_V (summing to zero) and sectional values k_ij on eigenplanes."""

    lam: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        k = np.asarray(self.k, dtype=float)
        n = lam.shape[0]
        if lam.ndim != 1 or k.shape != (n, n):
            raise InvalidSample("need n eigenvalues and an n x n sectional matrix")
        if abs(lam.sum()) > 1e-12 * max(1.0, np.abs(lam).sum()):
            raise InvalidSample(f"eigenvalues must sum to zero (sum {lam.sum():.3g})")
        if np.any(np.diag(k) != 0.0):
            raise InvalidSample("k_ii must vanish")
        if not np.array_equal(k, k.T):
            raise InvalidSample("k must be symmetric")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    def within(self, pinch: CurvaturePinch, tol: float = 1e-12) -> bool:
        lo, hi = pinch.window
        off = self.k[~np.eye(self.n, dtype=bool)]
        return bool(np.all(off >= lo - tol) and np.all(off <= hi + tol))


def crucial_pairs(lam: np.ndarray, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched lhs = sum_{i<j} (l_j - l_i)^2 k_ij - 2 sum_{i<j} l_i l_j k_ij and psi = sum l_i^2."""
    n = lam.shape[-1]
    iu, ju = np.triu_indices(n, 1)
    li, lj = lam[..., iu], lam[..., ju]
    kij = k[..., iu, ju]
    lhs = np.sum((lj - li) ** 2 * kij, axis=-1) - 2.0 * np.sum(li * lj * kij, axis=-1)
    return lhs, np.sum(lam**2, axis=-1)


def crucial_pair(sample: SpectrumSample) -> tuple[float, float]:
    lhs, psi = crucial_pairs(sample.lam, sample.k)
    return float(lhs), float(psi)


def _diagonal_curvature(k: np.ndarray) -> np.ndarray:
    """Lowered curvature with g(R(e_i,e_j)e_k,e_l) = k_ij (d_il d_jk - d_ik d_jl)."""
    n = k.shape[-1]
    eye = np.eye(n)
    return np.einsum("...ij,il,jk->...ijkl", k, eye, eye) - np.einsum(
        "...ij,ik,jl->...ijkl", k, eye, eye
    )


def crucial_pair_contraction(
    lam: np.ndarray, k: np.ndarray, rotation: np.ndarray | None = None
) -> np.ndarray:
    """<T'_V, A_V> evaluated from the (0,4) tensor T_V itself.

    ``T_V(X,Y,Z,W) = -<K_V X, R(Y,Z)W> - 2<K_V W, R(Y,Z)X>``, traced over the
    second and fourth slots and paired with A_V = <K_V ., .>.  The curvature is
    the algebraic tensor with the given sectional values on eigenplanes; an
    optional orthogonal ``rotation`` moves everything off the eigenbasis.
    """
    lam = np.atleast_2d(lam)
    k = k.reshape(lam.shape + (lam.shape[-1],))
    KV = np.einsum("...i,ij->...ij", lam, np.eye(lam.shape[-1]))
    Rl = _diagonal_curvature(k)  # [y, z, w, m] = <R(e_y,e_z)e_w, e_m>
    if rotation is not None:
        Q = np.asarray(rotation)
        KV = np.einsum("ia,...ab,jb->...ij", Q, KV, Q)
        Rl = np.einsum("ia,jb,kc,ld,...abcd->...ijkl", Q, Q, Q, Q, Rl)
    T = -np.einsum("...mx,...yzwm->...xyzw", KV, Rl) - 2.0 * np.einsum(
        "...mw,...yzxm->...xyzw", KV, Rl
    )
    Tp = np.einsum("...xizi->...xz", T)
    return np.einsum("...xz,...xz->...", Tp, KV)


def random_spectrum(rng: np.random.Generator, n: int, size: int, pinch: CurvaturePinch):
    lam = rng.standard_normal((size, n))
    lam -= lam.mean(axis=1, keepdims=True)
    lo, hi = pinch.window
    iu, ju = np.triu_indices(n, 1)
    k = np.zeros((size, n, n))
    vals = rng.uniform(lo, hi, size=(size, len(iu)))
    k[:, iu, ju] = vals
    k[:, ju, iu] = vals
    return lam, k


def crucial_sweep(
    n: int,
    h3: float,
    eps: float,
    samples: int,
    seed: int = 0,
    threads: int | None = None,
    slack_tol: float = 1e-9,
) -> VerificationReport:
    """Sample spectra and pinched sectional values; count violations of the contraction bound."""
    if n < 2:
        raise InvalidPinch("n must be >= 2")
    pinch = CurvaturePinch.from_h3_eps(n, h3, eps)

    def work(rng, size):
        lam, k = random_spectrum(rng, n, size, pinch)
        lhs, psi = crucial_pairs(lam, k)
        slack = lhs - (n + 1) * h3 * psi
        scale = 1.0 + abs(h3) * psi
        viol = int(np.count_nonzero(slack < -slack_tol * scale))
        return viol, float(slack.min(initial=np.inf)), float((slack / scale).min(initial=np.inf))

    parts = run_chunks(samples, seed, work, threads)
    violations = sum(p[0] for p in parts)
    min_slack = min((p[1] for p in parts), default=math.inf)
    min_rel = min((p[2] for p in parts), default=math.inf)
    rep = VerificationReport(command="verify crucial", subject=f"n={n} H3={h3:g} eps={eps:g}", seed=seed)
    rep.tolerances["slack_rel"] = slack_tol
    rep.add(
        Check(
            "crucial.violations",
            violations,
            0,
            samples,
            extra={"min_slack": min_slack, "min_rel_slack": min_rel},
        )
    )
    rep.summary.update({"violations": violations, "min_slack": min_slack, "min_rel_slack": min_rel})
    return rep


# ---------------------------------------------------------------------------
# Nomizu inequality


def random_trace_free_cubic(rng: np.random.Generator, n: int, size: int | None = None) -> np.ndarray:
    """Symmetric, trace-free cubic forms on Euclidean R^n (orthonormal frame)."""
    shape = (1 if size is None else size, n, n, n)
    T = rng.standard_normal(shape)
    T = (
        T
        + T.transpose(0, 1, 3, 2)
        + T.transpose(0, 2, 1, 3)
        + T.transpose(0, 2, 3, 1)
        + T.transpose(0, 3, 1, 2)
        + T.transpose(0, 3, 2, 1)
    ) / 6.0
    tr = np.einsum("biik->bk", T)
    eye = np.eye(n)
    T = T - (
        np.einsum("ij,bk->bijk", eye, tr)
        + np.einsum("ik,bj->bijk", eye, tr)
        + np.einsum("jk,bi->bijk", eye, tr)
    ) / (n + 2)
    return T[0] if size is None else T


def to_frame(A: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Components of a covariant 3-tensor in the index-ordered g-orthonormal frame."""
    E = orthonormal_frame(np.asarray(g, dtype=float))
    return np.einsum("abc,ia,jb,kc->ijk", np.asarray(A, dtype=float), E, E, E), E


def F_tensor(A: np.ndarray) -> np.ndarray:
    """F(X,Y,Z) = -tr([K_., K_X] A)(., Y, Z) for orthonormal-frame components (batched)."""
    # C[i, x, a, b] = ([K_i, K_x])_{ab};  K_i has matrix A[i]
    C = np.einsum("...iac,...xcb->...ixab", A, A) - np.einsum("...xac,...icb->...ixab", A, A)
    return (
        np.einsum("...ixai,...ayz->...xyz", C, A)
        + np.einsum("...ixay,...iaz->...xyz", C, A)
        + np.einsum("...ixaz,...iya->...xyz", C, A)
    )


def nomizu_gaps(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched g(F, A) - (n+1)/(n(n-1)) g(A, A)^2 and g(A, A), orthonormal frame."""
    n = A.shape[-1]
    F = F_tensor(A)
    gFA = np.einsum("...xyz,...xyz->...", F, A)
    psi = np.einsum("...xyz,...xyz->...", A, A)
    return gFA - (n + 1) / (n * (n - 1)) * psi**2, psi


def nomizu_gap(A, g, trace_tol: float = 1e-10) -> float:
    """Nomizu gap for a trace-free cubic form ``A`` at a point with metric ``g``."""
    A = np.asarray(A, dtype=float)
    Af, _ = to_frame(A, np.asarray(g, dtype=float))
    tr = np.einsum("iik->k", Af)
    if np.max(np.abs(tr), initial=0.0) > trace_tol * max(1.0, np.max(np.abs(Af), initial=0.0)):
        raise NotTraceFree(f"trace residual {np.max(np.abs(tr)):.3g}")
    gap, _ = nomizu_gaps(Af)
    return float(gap)


def nomizu_sweep(
    n: int,
    samples: int,
    seed: int = 0,
    threads: int | None = None,
    slack_tol: float = 1e-9,
) -> VerificationReport:
    def work(rng, size):
        A = random_trace_free_cubic(rng, n, size)
        gap, psi = nomizu_gaps(A)
        scale = 1.0 + psi**2
        viol = int(np.count_nonzero(gap < -slack_tol * scale))
        return viol, float(gap.min(initial=np.inf)), float((gap / scale).min(initial=np.inf))

    parts = run_chunks(samples, seed, work, threads, chunk=2048)
    violations = sum(p[0] for p in parts)
    min_gap = min((p[1] for p in parts), default=math.inf)
    min_rel = min((p[2] for p in parts), default=math.inf)
    rep = VerificationReport(command="verify nomizu", subject=f"n={n}", seed=seed)
    rep.tolerances["slack_rel"] = slack_tol
    rep.add(Check("nomizu.violations", violations, 0, samples, extra={"min_gap": min_gap, "min_rel_gap": min_rel}))
    rep.summary.update({"violations": violations, "min_gap": min_gap, "min_rel_gap": min_rel})
    return rep


# ---------------------------------------------------------------------------
# empirical pinch and the psi inequality


@dataclass(frozen=True)
class EmpiricalPinch:
    pinch: CurvaturePinch
    planes: int
    points: int


def empirical_pinch(
    s: StatStructure,
    planes: int = 10_000,
    seed: int = 0,
    points: np.ndarray | None = None,
    refine: bool = True,
) -> EmpiricalPinch:
    """Estimate H1, H2 as extremes of sampled sectional nabla-curvatures.

    Every coordinate plane is included at each point, the rest are random;
    with ``refine`` the extreme planes found at each point are polished by a
    local optimizer.  These are estimates, not certified bounds.
    """
    pts = s.chart.grid_points() if points is None else np.atleast_2d(points)
    rng = np.random.default_rng(seed)
    per_point = max(1, -(-planes // len(pts)))
    coords = coordinate_planes(s.n)
    lo, hi = math.inf, -math.inf
    count = 0
    for p in pts:
        b = curvature_bundle_at(s, p)
        frames = np.concatenate([coords, random_planes(rng, s.n, per_point)])
        ks = sectional_values(b, frames)
        kmin, kmax = float(ks.min()), float(ks.max())
        if refine and s.n > 2:
            kmin = min(kmin, refine_sectional_extreme(b, frames[int(ks.argmin())], maximize=False))
            kmax = max(kmax, refine_sectional_extreme(b, frames[int(ks.argmax())], maximize=True))
        lo, hi = min(lo, kmin), max(hi, kmax)
        count += len(frames)
    return EmpiricalPinch(CurvaturePinch.from_h1_h2(s.n, hi, lo), count, len(pts))


def _require_hypotheses(geo: PointGeometry, tol: float) -> None:
    tr = structure_residuals(geo, None)["trace_free"]
    if tr > tol:
        raise PreconditionViolated(f"not trace-free (residual {tr:.3g})")
    cs = conjugate_symmetry_report(geo, None)
    worst = max(cs.values())
    if worst > tol:
        raise PreconditionViolated(f"not conjugate symmetric (residual {worst:.3g})")


def _frame_data(geo: PointGeometry):
    """Orthonormal-frame A, nabla-curvature R, mean curvature and R hat."""
    b = _bundle_from_geometry(geo)
    E = orthonormal_frame(geo.g)
    # frame components of a (1,3) tensor: lower with g, then contract all slots with E
    def frame(R):
        return np.einsum("abcw,ia,jb,kc,lw->ijkl", np.einsum("abcd,dw->abcw", R, geo.g), E, E, E, E)

    Af = np.einsum("abc,ia,jb,kc->ijk", geo.A, E, E, E)
    return E, Af, frame(b.R), frame(b.Rmean), frame(b.Rhat), b


def _curvature_action_trace(Rf: np.ndarray, Af: np.ndarray) -> np.ndarray:
    """out[x,y,z] = sum_i (R(e_i, e_x) A)(e_i, e_y, e_z), R acting as a derivation."""
    return -(
        np.einsum("ixid,dyz->xyz", Rf, Af)
        + np.einsum("ixyd,idz->xyz", Rf, Af)
        + np.einsum("ixzd,iyd->xyz", Rf, Af)
    )


def a_prime_check(s: StatStructure, p: Sequence[float], h3: float) -> dict[str, float]:
    """g(A', A) against (n+1) psi H3, with A'(X,Y,Z) = tr_g(R(., X) A)(., Y, Z)."""
    geo = _geo(s, p)
    _, Af, Rf, _, _, _ = _frame_data(geo)
    Ap = _curvature_action_trace(Rf, Af)
    gAA = float(np.einsum("xyz,xyz->", Ap, Af))
    psi = float(np.einsum("xyz,xyz->", Af, Af))
    rhs = (s.n + 1) * psi * h3
    return {"lhs": gAA, "rhs": rhs, "slack": gAA - rhs, "psi": psi}


def laplacian_A_check(s: StatStructure, p: Sequence[float]) -> dict[str, float]:
    """Rough Laplacian of A against tr(R hat(., X) A) and against A' + F."""
    geo = _geo(s, p)
    E, Af, Rf, _, Rhf, _ = _frame_data(geo)
    lap = np.einsum("aw,awxyz->xyz", geo.ginv, geo.nabla2_hat_A)
    lap_f = np.einsum("xyz,ix,jy,kz->ijk", lap, E, E, E)
    via_rhat = _curvature_action_trace(Rhf, Af)
    via_split = _curvature_action_trace(Rf, Af) + F_tensor(Af)
    scale = max(1.0, float(np.max(np.abs(lap_f))))
    return {
        "rough_vs_rhat": float(np.max(np.abs(lap_f - via_rhat))) / scale,
        "rhat_vs_split": float(np.max(np.abs(via_rhat - via_split))) / scale,
    }


def delta_psi_check(
    s: StatStructure,
    p: Sequence[float],
    h3: float | None = None,
    hypothesis_tol: float = 1e-8,
    planes: int = 10_000,
    seed: int = 0,
) -> dict[str, float]:
    """Laplacian of psi = g(A, A) against 2(n+1) psi H3 + 2(n+1)/(n(n-1)) psi^2.

    ``h3`` defaults to the adapted H3 of the empirically sampled pinch.
    """
    geo = _geo(s, p)
    _require_hypotheses(geo, hypothesis_tol)
    if h3 is None:
        h3 = empirical_pinch(s, planes, seed).pinch.H3
    if h3 > 0:
        raise PreconditionViolated(f"H3 = {h3:.6g} is positive")
    n = s.n
    jet = psi_jet(geo, None)
    lhs = laplacian_scalar_at(s, jet, geo.point)
    psi = jet.value
    rhs = 2 * (n + 1) * psi * h3 + 2 * (n + 1) / (n * (n - 1)) * psi**2
    return {"lhs": lhs, "rhs": rhs, "slack": lhs - rhs, "psi": psi, "H3": h3}


# ---------------------------------------------------------------------------
# root bound and windows


def _poly(coeffs: np.ndarray, x: float) -> float:
    # b0 x^k - b1 x^(k-1) - ... - bk
    signed = np.concatenate([[coeffs[0]], -coeffs[1:]])
    return float(np.polyval(signed, x))


def largest_root(coeffs: Sequence[float]) -> float:
    """Largest real root of b0 x^k - b1 x^(k-1) - ... - bk (b0 > 0, bi >= 0, k > 1).

    Companion-matrix eigenvalues give the estimate; Newton steps polish it.
    The sign pattern leaves exactly one non-negative root.
    """
    b = np.asarray(coeffs, dtype=float)
    if b.ndim != 1 or len(b) < 3:
        raise InvalidCoefficients("need b0..bk with k > 1")
    if not b[0] > 0 or np.any(b[1:] < 0) or not np.all(np.isfinite(b)):
        raise InvalidCoefficients("need b0 > 0 and b1..bk >= 0")
    if np.all(b[1:] == 0):
        return 0.0
    k = len(b) - 1
    comp = np.zeros((k, k))
    comp[0, :] = b[1:] / b[0]
    comp[1:, :-1] = np.eye(k - 1)
    ev = np.linalg.eigvals(comp)
    real = ev.real[np.abs(ev.imag) <= 1e-9 * max(1.0, np.abs(ev).max())]
    r = float(real.max())
    signed = np.concatenate([[b[0]], -b[1:]])
    deriv = np.polyder(signed)
    for _ in range(8):
        f = float(np.polyval(signed, r))
        df = float(np.polyval(deriv, r))
        if df == 0.0:
            break
        step = f / df
        if not abs(float(np.polyval(signed, r - step))) < abs(f):
            break
        r -= step
    return max(r, 0.0)


def psi_sup_bound(n: int, h3: float) -> float:
    """-n(n-1) H3, the largest root of the psi inequality's polynomial."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if h3 > 0:
        raise PositiveH3(f"H3 = {h3} must be non-positive")
    return -n * (n - 1) * h3 + 0.0


def psi_polynomial(n: int, h3: float) -> list[float]:
    """Coefficients b0, b1, b2 of the polynomial bounding Delta psi from below."""
    return [2 * (n + 1) / (n * (n - 1)), -2 * (n + 1) * h3 + 0.0, 0.0]


def bounds_windows(pinch: CurvaturePinch) -> dict[str, float]:
    """Ricci and scalar windows for g under a pinch with H3 <= 0."""
    pinch.require_nonpositive_h3()
    n, h3, e = pinch.n, pinch.H3, pinch.eps
    return {
        "ricci_lo": (n - 1) * h3 + (n - 1) * (n - 2) / 2 * e + 0.0,
        "ricci_hi": -((n - 1) ** 2) * h3 + (n - 1) * n / 2 * e + 0.0,
        "scalar_lo": n * (n - 1) * h3 + (n - 1) * (n - 2) * n / 2 * e + 0.0,
        "scalar_hi": n**2 * (n - 1) / 2 * e + 0.0,
    }


def bounds_windows_h1h2(n: int, h1: float, h2: float) -> dict[str, float]:
    """The same windows written through H1, H2 and eps = H1 - H2."""
    e = h1 - h2
    CurvaturePinch.from_h1_h2(n, h1, h2).require_nonpositive_h3()
    return {
        "ricci_lo": (n - 1) * h2 + 0.0,
        "ricci_hi": (n - 1) * ((1 - n) * h1 + n**2 / 2 * e) + 0.0,
        "scalar_lo": n * (n - 1) * h2 + 0.0,
        "scalar_hi": n**2 * (n - 1) / 2 * e + 0.0,
    }


# ---------------------------------------------------------------------------
# maximum of the cubic form on the unit sphere


@dataclass(frozen=True)
class CubicMax:
    V: np.ndarray  # coordinate components, g-unit
    value: float
    converged: bool
    iterations: int
    restarts: int


def _cubic(Af: np.ndarray, u: np.ndarray) -> float:
    return float(np.einsum("ijk,i,j,k->", Af, u, u, u))


def _tangent_grad(Af, u):
    grad = 3.0 * np.einsum("ijk,j,k->i", Af, u, u)
    return grad - (grad @ u) * u


def _newton_polish(Af, u, f, tol, steps=20):
    """Riemannian Newton steps on the sphere; kept only while they help."""
    n = len(u)
    for _ in range(steps):
        tang = _tangent_grad(Af, u)
        gn = float(np.linalg.norm(tang))
        if gn <= tol:
            return u, f, True
        P = np.eye(n) - np.outer(u, u)
        H = P @ (6.0 * np.einsum("ijk,k->ij", Af, u) - 3.0 * f * np.eye(n)) @ P
        # solve on the tangent space; the u u^T term keeps the system regular
        eta = np.linalg.lstsq(H + np.outer(u, u), -tang, rcond=None)[0]
        eta -= (eta @ u) * u
        cand = u + eta
        cand /= np.linalg.norm(cand)
        fc = _cubic(Af, cand)
        if fc < f - 1e-12 * max(1.0, abs(f)) or np.linalg.norm(_tangent_grad(Af, cand)) >= gn:
            return u, f, False
        u, f = cand, fc
    return u, f, float(np.linalg.norm(_tangent_grad(Af, u))) <= tol


def _ascend(Af, u, max_iter, step, tol):
    f = _cubic(Af, u)
    t = step
    it = 0
    tang_norm = math.inf
    for it in range(1, max_iter + 1):
        tang = _tangent_grad(Af, u)
        tang_norm = float(np.linalg.norm(tang))
        if tang_norm <= tol:
            return u, f, True, it
        # near a maximum, switch to Newton; fall back to gradient steps if it stalls
        if it % 25 == 0:
            u2, f2, done = _newton_polish(Af, u, f, tol)
            if done:
                return u2, f2, True, it
            if f2 >= f:
                u, f = u2, f2
                continue
        while t > 1e-18:
            cand = u + t * tang
            cand /= np.linalg.norm(cand)
            fc = _cubic(Af, cand)
            if fc > f:
                u, f = cand, fc
                break
            # increments below rounding of f: accept when the gradient shrinks
            if fc >= f - 4e-16 * max(1.0, abs(f)):
                if np.linalg.norm(_tangent_grad(Af, cand)) < tang_norm:
                    u, f = cand, fc
                    break
            t *= 0.5
        else:
            break
    u, f, done = _newton_polish(Af, u, f, tol)
    return u, f, done, it


def max_cubic_direction(
    s: StatStructure,
    p: Sequence[float],
    restarts: int = 32,
    seed: int = 0,
    max_iter: int = 500,
    step: float = 0.1,
    tol: float = 1e-10,
) -> CubicMax:
    """Multi-start projected gradient ascent of U -> A(U,U,U) on the g-unit sphere."""
    geo = _geo(s, p)
    Af, E = to_frame(geo.A, geo.g)
    n = s.n
    if not np.any(Af):
        return CubicMax(E[0].copy(), 0.0, True, 0, restarts)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        u0 = rng.standard_normal(n)
        u0 /= np.linalg.norm(u0)
        u, f, conv, it = _ascend(Af, u0, max_iter, step, tol)
        V = E.T @ u
        key = (round(f, 10), tuple(np.round(V, 8)))
        if best is None or key > best[0]:
            best = (key, V, f, conv, it)
    _, V, f, conv, it = best
    return CubicMax(V, max(f, 0.0), conv, it, restarts)


def _eigen_frame(Af: np.ndarray, u: np.ndarray):
    n = len(u)
    M = np.einsum("ijk,i->jk", Af, u)
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    comp = Q[:, 1:n]
    w, vecs = np.linalg.eigh(comp.T @ M @ comp)
    basis = np.column_stack([u, comp @ vecs])
    lam1 = float(u @ M @ u)
    return M, basis, np.concatenate([[lam1], w])


def maximizer_checks(s: StatStructure, p: Sequence[float], V: Sequence[float]) -> dict:
    """Eigenvector property of a maximizer V of A(U,U,U) and the two pointwise identities."""
    geo = _geo(s, p)
    V = np.asarray(V, dtype=float)
    gVV = float(V @ geo.g @ V)
    if abs(gVV - 1.0) > 1e-8:
        raise NotUnit(f"g(V, V) = {gVV:.12g}")
    E, Af, Rf, Rmf, _, _ = _frame_data(geo)
    u = E @ geo.g @ V
    M, B, lam = _eigen_frame(Af, u)
    lam1 = lam[0]
    eig_res = float(np.linalg.norm(M @ u - lam1 * u))
    gaps = [float(lam1 - 2 * li) for li in lam[1:]]

    # identities, evaluated in the eigenbasis B (columns)
    Ab = np.einsum("abc,ai,bj,ck->ijk", Af, B, B, B)
    F = F_tensor(Ab)
    lhs_K = float(F[0, 0, 0])
    rhs_K = float(np.sum(lam**2 * (3 * lam1 - 2 * lam)))
    Rb = np.einsum("abcd,ai,bj,ck,dl->ijkl", Rf, B, B, B, B)
    Rmb = np.einsum("abcd,ai,bj,ck,dl->ijkl", Rmf, B, B, B, B)
    lhs_R = float(_curvature_action_trace(Rb, Ab)[0, 0, 0])
    k_i1 = np.array([Rmb[i, 0, 0, i] for i in range(s.n)])
    k_i1[0] = 0.0
    rhs_R = float(np.sum((lam1 - 2 * lam) * k_i1))
    scale_K = max(1.0, abs(rhs_K))
    scale_R = max(1.0, abs(rhs_R))
    return {
        "eigvec_residual": eig_res,
        "lambda1": float(lam1),
        "lambdas": [float(x) for x in lam],
        "lambda_gaps": gaps,
        "identity_K_residual": abs(lhs_K - rhs_K) / scale_K,
        "identity_R_residual": abs(lhs_R - rhs_R) / scale_R,
        "identity_K": (lhs_K, rhs_K),
        "identity_R": (lhs_R, rhs_R),
        "k_i1": [float(x) for x in k_i1],
    }


def delta_phi_check(
    s: StatStructure,
    p: Sequence[float],
    V: Sequence[float],
    N: float,
) -> dict[str, float]:
    """Laplacian of Phi = A(V,V,V) (V parallel-extended) against (n+1) N phi + phi^3.

    The Laplacian is sum_i (nabla_hat^2 A)(e_i, e_i; V, V, V); it is also
    compared with sum_i (R hat(e_i, V) A)(e_i, V, V).
    """
    geo = _geo(s, p)
    V = np.asarray(V, dtype=float)
    lap_A_V = float(np.einsum("aw,awxyz,x,y,z->", geo.ginv, geo.nabla2_hat_A, V, V, V))
    E, Af, _, _, Rhf, _ = _frame_data(geo)
    u = E @ geo.g @ V
    via_rhat = float(np.einsum("xyz,x,y,z->", _curvature_action_trace(Rhf, Af), u, u, u))
    phi = _cubic(Af, u)
    rhs = (s.n + 1) * N * phi + phi**3
    return {
        "lhs": lap_A_V,
        "via_rhat": via_rhat,
        "identity_residual": abs(lap_A_V - via_rhat) / max(1.0, abs(lap_A_V)),
        "rhs": rhs,
        "slack": lap_A_V - rhs,
        "phi": phi,
    }


def cubic_sup_bound(n: int, N: float) -> float:
    """sqrt(-(n+1) N): bound on A(U,U,U) for unit U when sectional curvature >= N."""
    if N > 0:
        raise PositiveN(f"N = {N} must be non-positive")
    return math.sqrt(-(n + 1) * N)
