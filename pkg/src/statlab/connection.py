"""Levi-Civita, statistical and dual connections on a chart.

Index conventions (all 0-based, coordinate frame):

* ``gamma[k, i, j]`` is the coefficient of ``d_k`` in ``nabla_{d_i} d_j``;
  ``dgamma[a, k, i, j]`` is its partial along axis ``a``.
* ``K[i, j, k]`` is component ``i`` of ``K(d_j, d_k)``, i.e. ``g^{il} A_{ljk}``.
* covariant derivatives put the differentiating slot first:
  ``nabla_hat_A[w, x, y, z] = (nabla_hat_w A)(x, y, z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import exprlang as el
from .chart import StatStructure, TensorValue, _check_metric
from .jets import Jet, jet_einsum, jet_inverse

__all__ = [
    "ConnectionCoeffs",
    "PointGeometry",
    "PreconditionViolated",
    "geometry_at",
    "christoffel_at",
    "difference_tensor_at",
    "statistical_connections_at",
    "duality_residual",
    "metric_compatibility_residual",
    "structure_residuals",
    "nabla_hat_A_at",
    "laplacian_scalar_at",
    "ScalarJet",
    "psi_jet",
    "rough_laplacian_A",
    "simons_check",
]


class PreconditionViolated(ValueError):
    pass


@dataclass(frozen=True)
class ConnectionCoeffs:
    gamma: np.ndarray

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.gamma - self.gamma.transpose(0, 2, 1)), initial=0.0))

    def __add__(self, other):
        return ConnectionCoeffs(self.gamma + np.asarray(other))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.gamma, dtype=dtype)


class PointGeometry:
    """Everything first-order about a structure at one point, computed lazily.

    Second-order data (Christoffel derivatives, second derivatives of ``A``)
    are pulled from the symbolic jets only when a property needs them.
    """

    def __init__(self, s: StatStructure, p: Sequence[float]):
        self.structure = s
        self.point = np.asarray(p, dtype=float)
        self.jets = s.jets_at(self.point, order=2)
        self.n = s.n
        _check_metric(self.jets.g.val, self.point)

    # --- metric -------------------------------------------------------------
    @property
    def g(self) -> np.ndarray:
        return self.jets.g.val

    @property
    def dg(self) -> np.ndarray:
        return self.jets.g.d

    @cached_property
    def ginv_jet(self) -> Jet:
        return jet_inverse(self.jets.g)

    @property
    def ginv(self) -> np.ndarray:
        return self.ginv_jet.val

    # --- Levi-Civita ----------------------------------------------------------
    @cached_property
    def gamma(self) -> np.ndarray:
        return 0.5 * np.einsum("kl,ijl->kij", self.ginv, self._koszul(self.dg))

    @staticmethod
    def _koszul(dg: np.ndarray) -> np.ndarray:
        # out[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij   (dg[a, b, c] = d_a g_bc)
        return dg + dg.transpose(1, 0, 2) - np.einsum("lij->ijl", dg)

    @cached_property
    def dgamma(self) -> np.ndarray:
        ddg = self.jets.g.dd
        dkos = ddg + ddg.transpose(0, 2, 1, 3) - np.einsum("alij->aijl", ddg)
        return 0.5 * (
            np.einsum("akl,ijl->akij", self.ginv_jet.d, self._koszul(self.dg))
            + np.einsum("kl,aijl->akij", self.ginv, dkos)
        )

    # --- cubic form and difference tensor -----------------------------------
    @property
    def A(self) -> np.ndarray:
        return self.jets.A.val

    @property
    def dA(self) -> np.ndarray:
        return self.jets.A.d

    @cached_property
    def K(self) -> np.ndarray:
        return np.einsum("il,ljk->ijk", self.ginv, self.A)

    @cached_property
    def dK(self) -> np.ndarray:
        return np.einsum("ail,ljk->aijk", self.ginv_jet.d, self.A) + np.einsum(
            "il,aljk->aijk", self.ginv, self.dA
        )

    @cached_property
    def nabla_hat_A(self) -> np.ndarray:
        G, A = self.gamma, self.A
        return (
            self.dA
            - np.einsum("mwx,myz->wxyz", G, A)
            - np.einsum("mwy,xmz->wxyz", G, A)
            - np.einsum("mwz,xym->wxyz", G, A)
        )

    @cached_property
    def nabla_hat_K(self) -> np.ndarray:
        """``[a, d, b, c]`` = component d of (nabla_hat_a K)(d_b, d_c)."""
        G, K = self.gamma, self.K
        return (
            self.dK
            + np.einsum("dae,ebc->adbc", G, K)
            - np.einsum("eab,dec->adbc", G, K)
            - np.einsum("eac,dbe->adbc", G, K)
        )

    @cached_property
    def nabla2_hat_A(self) -> np.ndarray:
        """``[a, w, x, y, z]`` = (nabla_hat_a (nabla_hat A))(w, x, y, z)."""
        G, dG, A, dA = self.gamma, self.dgamma, self.A, self.dA
        ddA = self.jets.A.dd
        T = self.nabla_hat_A
        # partial_a of T[w, x, y, z]
        dT = (
            ddA
            - np.einsum("amwx,myz->awxyz", dG, A)
            - np.einsum("mwx,amyz->awxyz", G, dA)
            - np.einsum("amwy,xmz->awxyz", dG, A)
            - np.einsum("mwy,axmz->awxyz", G, dA)
            - np.einsum("amwz,xym->awxyz", dG, A)
            - np.einsum("mwz,axym->awxyz", G, dA)
        )
        return (
            dT
            - np.einsum("maw,mxyz->awxyz", G, T)
            - np.einsum("max,wmyz->awxyz", G, T)
            - np.einsum("may,wxmz->awxyz", G, T)
            - np.einsum("maz,wxym->awxyz", G, T)
        )


def geometry_at(s: StatStructure, p: Sequence[float]) -> PointGeometry:
    return PointGeometry(s, p)


def _geo(s_or_geo, p=None) -> PointGeometry:
    if isinstance(s_or_geo, PointGeometry):
        return s_or_geo
    return PointGeometry(s_or_geo, p)


def christoffel_at(s: StatStructure, p: Sequence[float]) -> ConnectionCoeffs:
    return ConnectionCoeffs(_geo(s, p).gamma)


def difference_tensor_at(s: StatStructure, p: Sequence[float]) -> tuple[TensorValue, TensorValue]:
    geo = _geo(s, p)
    K = TensorValue(geo.K, "udd", ((1, 2, "sym"),))
    A = TensorValue(geo.A, "ddd", ((0, 1, "sym"), (1, 2, "sym"), (0, 2, "sym")))
    return K, A


def statistical_connections_at(
    s: StatStructure, p: Sequence[float]
) -> tuple[ConnectionCoeffs, ConnectionCoeffs, ConnectionCoeffs]:
    """The Levi-Civita connection, ``nabla = hat + K`` and its dual ``hat - K``."""
    geo = _geo(s, p)
    return (
        ConnectionCoeffs(geo.gamma),
        ConnectionCoeffs(geo.gamma + geo.K),
        ConnectionCoeffs(geo.gamma - geo.K),
    )


def _covariant_metric(gamma: np.ndarray, g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``[x, y, z]`` = (nabla_x g)(y, z) for connection coefficients ``gamma``."""
    return dg - np.einsum("mxy,mz->xyz", gamma, g) - np.einsum("mxz,ym->xyz", gamma, g)


def duality_residual(s: StatStructure, p: Sequence[float]) -> float:
    """Max over coordinate fields of g(nabla_X Y, Z) + g(Y, bar_X Z) - X g(Y, Z)."""
    geo = _geo(s, p)
    _, nab, bar = statistical_connections_at(geo.structure, geo.point)
    lhs = np.einsum("mxy,mz->xyz", nab.gamma, geo.g) + np.einsum("mxz,ym->xyz", bar.gamma, geo.g)
    return float(np.max(np.abs(lhs - geo.dg)))


def metric_compatibility_residual(s: StatStructure, p: Sequence[float]) -> float:
    geo = _geo(s, p)
    return float(np.max(np.abs(_covariant_metric(geo.gamma, geo.g, geo.dg))))


def structure_residuals(s: StatStructure, p: Sequence[float]) -> dict[str, float]:
    """Codazzi residual of ``nabla g`` and the trace residual ``max_X |tr_g A(X,.,.)|``."""
    geo = _geo(s, p)
    ng = _covariant_metric(geo.gamma + geo.K, geo.g, geo.dg)
    codazzi = float(np.max(np.abs(ng - ng.transpose(1, 0, 2))))
    trace = np.einsum("ij,xij->x", geo.ginv, geo.A)
    # max over g-unit X of |tr A(X,.,.)| is the g-norm of the trace covector
    trace_free = float(np.sqrt(max(trace @ geo.ginv @ trace, 0.0)))
    return {"codazzi": codazzi, "trace_free": trace_free}


def nabla_hat_A_at(s: StatStructure, p: Sequence[float]) -> TensorValue:
    geo = _geo(s, p)
    return TensorValue(geo.nabla_hat_A, "dddd", ((1, 2, "sym"), (2, 3, "sym"), (1, 3, "sym")))


# ---------------------------------------------------------------------------
# Laplacians


@dataclass(frozen=True)
class ScalarJet:
    """Value, gradient and Hessian of a scalar field at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def from_jet(cls, j: Jet) -> "ScalarJet":
        return cls(float(j.val), np.asarray(j.d), np.asarray(j.dd))


def _expr_jet(e: el.Expr, p: np.ndarray, n: int) -> ScalarJet:
    pt = tuple(p.tolist())
    first = [el.differentiate(e, a) for a in range(n)]
    grad = np.array([el.evaluate(d, pt) for d in first])
    hess = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            hess[a, b] = hess[b, a] = el.evaluate(el.differentiate(first[a], b), pt)
    return ScalarJet(el.evaluate(e, pt), grad, hess)


def laplacian_scalar_at(
    s: StatStructure, f: Union[el.Expr, str, ScalarJet], p: Sequence[float]
) -> float:
    """Laplace-Beltrami operator of g applied to ``f`` at ``p``."""
    geo = _geo(s, p)
    if isinstance(f, str):
        f = el.parse(f, s.n)
    jet = f if isinstance(f, ScalarJet) else _expr_jet(f, geo.point, s.n)
    hess_cov = jet.hess - np.einsum("kij,k->ij", geo.gamma, jet.grad)
    return float(np.einsum("ij,ij->", geo.ginv, hess_cov))


def psi_jet(s: StatStructure, p: Sequence[float]) -> ScalarJet:
    """Second-order jet of psi = g(A, A) = g^{ia} g^{jb} g^{kc} A_ijk A_abc."""
    geo = _geo(s, p)
    gi, A = geo.ginv_jet, geo.jets.A
    return ScalarJet.from_jet(jet_einsum("ia,jb,kc,ijk,abc->", gi, gi, gi, A, A))


def rough_laplacian_A(s: StatStructure, p: Sequence[float]) -> np.ndarray:
    """``(Delta A)(x, y, z) = sum_i (nabla_hat^2_{e_i e_i} A)(x, y, z)``."""
    geo = _geo(s, p)
    return np.einsum("aw,awxyz->xyz", geo.ginv, geo.nabla2_hat_A)


def _full_norm_sq(T: np.ndarray, ginv: np.ndarray) -> float:
    """g-inner product of a covariant tensor with itself."""
    letters = "abcdefgh"[: T.ndim]
    upper = "ijklmnop"[: T.ndim]
    spec = ",".join(f"{l}{u}" for l, u in zip(letters, upper))
    return float(np.einsum(f"{spec},{letters},{upper}->", *([ginv] * T.ndim), T, T))


def simons_check(s: StatStructure, p: Sequence[float]) -> dict[str, float]:
    """Both sides of Delta g(A, A) = 2 g(Delta A, A) + 2 g(nabla_hat A, nabla_hat A)."""
    geo = _geo(s, p)
    lhs = laplacian_scalar_at(geo.structure, psi_jet(geo, None), geo.point)
    gi = geo.ginv
    lap_A = np.einsum("aw,awxyz->xyz", gi, geo.nabla2_hat_A)
    gLA = float(np.einsum("xa,yb,zc,xyz,abc->", gi, gi, gi, lap_A, geo.A))
    rhs = 2.0 * gLA + 2.0 * _full_norm_sq(geo.nabla_hat_A, gi)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "rel_error": abs(lhs - rhs) / scale if scale > 1e-300 else 0.0}
