"""Curvature tensors of a statistical structure and derived diagnostics.

A (1,3) curvature array ``R[a, b, c, d]`` holds component ``d`` of
``R(d_a, d_b) d_c``.  Lowered arrays ``Rl[a, b, c, w] = g(R(d_a, d_b) d_c, d_w)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .chart import DegenerateInput, Plane, StatStructure, TensorValue, gram_schmidt, orthonormal_frame
from .connection import PointGeometry, PreconditionViolated, _geo, structure_residuals

__all__ = [
    "CurvatureBundle",
    "riemann_from_coeffs",
    "bracket_KK",
    "curvature_bundle_at",
    "sectional_nabla_at",
    "sectional_values",
    "random_planes",
    "conjugate_symmetry_report",
    "identity_residuals",
    "projective_witness_at",
    "first_bianchi_residual",
    "riemannian_sectional_at",
    "DegeneratePlane",
    "coordinate_planes",
    "refine_sectional_extreme",
]


class DegeneratePlane(DegenerateInput):
    pass


def riemann_from_coeffs(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """Curvature of a torsion-free connection from its coefficients and their partials."""
    return (
        np.einsum("adbc->abcd", dgamma)
        - np.einsum("bdac->abcd", dgamma)
        + np.einsum("dae,ebc->abcd", gamma, gamma)
        - np.einsum("dbe,eac->abcd", gamma, gamma)
    )


def bracket_KK(K: np.ndarray) -> np.ndarray:
    """``[K_a, K_b] d_c`` as a (1,3) array."""
    return np.einsum("dae,ebc->abcd", K, K) - np.einsum("dbe,eac->abcd", K, K)


def _lower(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("abcd,dw->abcw", R, g)


def _raise(Rl: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    return np.einsum("abcw,wd->abcd", Rl, ginv)


def _ricci(R: np.ndarray) -> np.ndarray:
    # Ric(Y, Z) = tr(X -> R(X, Y) Z)
    return np.einsum("abca->bc", R)


@dataclass(frozen=True)
class CurvatureBundle:
    point: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    K: np.ndarray
    R: np.ndarray
    Rbar: np.ndarray
    Rhat: np.ndarray
    Rmean: np.ndarray
    ric: np.ndarray
    ricbar: np.ndarray
    richat: np.ndarray
    rho: float
    rhobar: float
    rhohat: float
    dual_residual: float  # Rbar via -K decomposition vs Rbar via duality

    def tensor(self, name: str) -> TensorValue:
        arr = getattr(self, name)
        if arr.ndim == 4:
            return TensorValue(arr, "dddu", ((0, 1, "anti"),))
        return TensorValue(arr, "dd")

    def lowered(self, name: str) -> np.ndarray:
        return _lower(getattr(self, name), self.g)


def _bundle_from_geometry(geo: PointGeometry) -> CurvatureBundle:
    g, ginv = geo.g, geo.ginv
    Rhat = riemann_from_coeffs(geo.gamma, geo.dgamma)
    nK = geo.nabla_hat_K
    ext = np.einsum("adbc->abcd", nK) - np.einsum("bdac->abcd", nK)
    KK = bracket_KK(geo.K)
    R = Rhat + ext + KK
    Rbar = Rhat - ext + KK  # same decomposition with K -> -K
    Rbar_dual = _raise(-np.einsum("abcw->abwc", _lower(R, g)), ginv)
    dual_residual = float(np.max(np.abs(Rbar - Rbar_dual)))
    Rmean = 0.5 * (R + Rbar)
    ric, ricbar, richat = _ricci(R), _ricci(Rbar), _ricci(Rhat)
    trace = lambda m: float(np.einsum("ij,ij->", ginv, m))  # noqa: E731
    return CurvatureBundle(
        point=geo.point,
        g=g,
        ginv=ginv,
        K=geo.K,
        R=R,
        Rbar=Rbar,
        Rhat=Rhat,
        Rmean=Rmean,
        ric=ric,
        ricbar=ricbar,
        richat=richat,
        rho=trace(ric),
        rhobar=trace(ricbar),
        rhohat=trace(richat),
        dual_residual=dual_residual,
    )


def curvature_bundle_at(s: StatStructure, p: Sequence[float]) -> CurvatureBundle:
    return _bundle_from_geometry(_geo(s, p))


# ---------------------------------------------------------------------------
# sectional curvature


def _plane_frame(g: np.ndarray, plane) -> np.ndarray:
    if isinstance(plane, Plane):
        vecs = np.array([plane.u, plane.v])
    else:
        vecs = np.asarray(plane, dtype=float)
    try:
        return gram_schmidt(g, vecs)
    except DegenerateInput as exc:
        raise DegeneratePlane(str(exc)) from None


def _k(Rl: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> float:
    return float(np.einsum("abcw,a,b,c,w->", Rl, e1, e2, e2, e1))


def sectional_nabla_at(s: StatStructure, p: Sequence[float], plane) -> float:
    """Sectional nabla-curvature g(Rmean(e1, e2) e2, e1) of the plane at ``p``."""
    b = curvature_bundle_at(s, p)
    e1, e2 = _plane_frame(b.g, plane)
    return _k(b.lowered("Rmean"), e1, e2)


def riemannian_sectional_at(s: StatStructure, p: Sequence[float], plane) -> float:
    """Sectional curvature of the metric alone (uses R hat)."""
    b = curvature_bundle_at(s, p)
    e1, e2 = _plane_frame(b.g, plane)
    return _k(b.lowered("Rhat"), e1, e2)


def random_planes(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """``m`` random coordinate 2-frames, shape (m, 2, n)."""
    return rng.standard_normal((m, 2, n))


def sectional_values(bundle: CurvatureBundle, frames: np.ndarray, which: str = "Rmean") -> np.ndarray:
    """Vectorized sectional values for a batch of planes, shape (m, 2, n)."""
    g = bundle.g
    u, v = frames[:, 0, :], frames[:, 1, :]
    uu = np.einsum("mi,ij,mj->m", u, g, u)
    e1 = u / np.sqrt(uu)[:, None]
    v = v - np.einsum("mi,ij,mj->m", e1, g, v)[:, None] * e1
    vv = np.einsum("mi,ij,mj->m", v, g, v)
    if np.any(vv < 1e-24):
        raise DegeneratePlane("degenerate plane in batch")
    e2 = v / np.sqrt(vv)[:, None]
    Rl = bundle.lowered(which)
    return np.einsum("abcw,ma,mb,mc,mw->m", Rl, e1, e2, e2, e1)


def coordinate_planes(n: int) -> np.ndarray:
    eye = np.eye(n)
    return np.array([[eye[i], eye[j]] for i, j in itertools.combinations(range(n), 2)])


# ---------------------------------------------------------------------------
# diagnostics


def conjugate_symmetry_report(s: StatStructure, p: Sequence[float]) -> dict[str, float]:
    """The three equivalent conjugate-symmetry conditions as residuals."""
    geo = _geo(s, p)
    b = _bundle_from_geometry(geo)
    nA = geo.nabla_hat_A
    Rl = b.lowered("R")
    return {
        "r_minus_rbar": float(np.max(np.abs(b.R - b.Rbar))),
        "nabla_hat_A_asym": float(np.max(np.abs(nA - nA.transpose(1, 0, 2, 3)))),
        "zw_skew": float(np.max(np.abs(Rl + Rl.transpose(0, 1, 3, 2)))),
    }


def identity_residuals(
    s: StatStructure, p: Sequence[float], trace_tol: float = 1e-8
) -> dict[str, float]:
    """Residuals of the curvature identities for trace-free structures.

    ``eq10``: R + Rbar = 2 Rhat + 2 [K, K];
    ``eq12``: Ric + Ricbar = 2 Richat - 2 g(K_Y, K_Z);
    ``eq17``: rhohat = rho + |A|^2;
    ``eq15_gap``: smallest g-eigenvalue of Richat - Ric (symmetrized).
    """
    geo = _geo(s, p)
    tr = structure_residuals(geo, None)["trace_free"]
    if tr > trace_tol:
        raise PreconditionViolated(f"structure is not trace-free (residual {tr:.3g})")
    b = _bundle_from_geometry(geo)
    g, gi, K = geo.g, geo.ginv, geo.K
    curv_sum = b.R + b.Rbar - 2.0 * b.Rhat - 2.0 * bracket_KK(K)
    gKK = np.einsum("ayi,bzj,ab,ij->yz", K, K, g, gi)
    ric_sum = b.ric + b.ricbar - 2.0 * b.richat + 2.0 * gKK
    normA = float(np.einsum("ia,jb,kc,ijk,abc->", gi, gi, gi, geo.A, geo.A))
    scalar_gap = b.rhohat - b.rho - normA
    diff = b.richat - b.ric
    diff = 0.5 * (diff + diff.T)
    gap = float(scipy.linalg.eigh(diff, g, eigvals_only=True).min())
    return {
        "eq10": float(np.max(np.abs(curv_sum))),
        "eq12": float(np.max(np.abs(ric_sum))),
        "eq17": float(abs(scalar_gap)),
        "eq15_gap": gap,
    }


def projective_witness_at(s: StatStructure, p: Sequence[float]) -> dict:
    """Distinct-index components g(R(e_i, e_j) e_j, e_l) in an orthonormal frame.

    Keys are 1-based ``"i,j,l"`` strings.  Any nonzero entry certifies that
    the connection is not projectively flat at ``p``.
    """
    b = curvature_bundle_at(s, p)
    n = b.g.shape[0]
    if n < 3:
        raise ValueError("projective witness needs dimension >= 3")
    E = orthonormal_frame(b.g)
    Rf = np.einsum("abcw,ia,jb,kc,lw->ijkl", b.lowered("R"), E, E, E, E)
    comps = {}
    for i, j, l in itertools.permutations(range(n), 3):
        comps[f"{i + 1},{j + 1},{l + 1}"] = float(Rf[i, j, j, l])
    max_abs = max(abs(v) for v in comps.values())
    return {"witness_components": comps, "max_abs": max_abs}


def first_bianchi_residual(R: np.ndarray) -> float:
    cyc = R + np.einsum("abcd->bcad", R) + np.einsum("abcd->cabd", R)
    return float(np.max(np.abs(cyc)))


def _quotient_and_grad(Rl: np.ndarray, g: np.ndarray, x: np.ndarray):
    n = g.shape[0]
    u, v = x[:n], x[n:]
    num = np.einsum("abcw,a,b,c,w->", Rl, u, v, v, u)
    guu, gvv, guv = u @ g @ u, v @ g @ v, u @ g @ v
    den = guu * gvv - guv**2
    dnum_u = np.einsum("abcw,b,c,w->a", Rl, v, v, u) + np.einsum("abcw,a,b,c->w", Rl, u, v, v)
    dnum_v = np.einsum("abcw,a,c,w->b", Rl, u, v, u) + np.einsum("abcw,a,b,w->c", Rl, u, v, u)
    dden_u = 2 * gvv * (g @ u) - 2 * guv * (g @ v)
    dden_v = 2 * guu * (g @ v) - 2 * guv * (g @ u)
    k = num / den
    grad = np.concatenate([(dnum_u - k * dden_u) / den, (dnum_v - k * dden_v) / den])
    return k, grad


def refine_sectional_extreme(
    bundle: CurvatureBundle, frame: np.ndarray, maximize: bool, which: str = "Rmean"
) -> float:
    """Polish a sampled extreme of the sectional curvature by BFGS on the plane quotient."""
    from scipy.optimize import minimize

    Rl, g = bundle.lowered(which), bundle.g
    sign = -1.0 if maximize else 1.0

    def fun(x):
        k, grad = _quotient_and_grad(Rl, g, x)
        return sign * k, sign * grad

    x0 = np.concatenate([frame[0], frame[1]])
    res = minimize(fun, x0, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 200})
    start = sign * fun(x0)[0]
    found = sign * float(res.fun)
    if not np.isfinite(found):
        return start
    return max(start, found) if maximize else min(start, found)
