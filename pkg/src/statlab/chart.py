"""Charts, statistical structures in (g, A) form, and pointwise evaluation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import exprlang as el
from .jets import Jet

__all__ = [
    "Chart",
    "StatStructure",
    "TensorValue",
    "Plane",
    "FieldJets",
    "ChartError",
    "NotPositiveDefinite",
    "DegenerateInput",
    "StepOutsideDomain",
    "metric_at",
    "orthonormalize",
    "orthonormal_frame",
    "gram_schmidt",
    "fd_partial",
]

GRAM_TOL = 1e-12


class ChartError(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    def __init__(self, min_eigenvalue: float, point=None):
        self.min_eigenvalue = float(min_eigenvalue)
        self.point = point
        super().__init__(
            f"metric not positive definite (smallest eigenvalue {min_eigenvalue:.6g})"
        )


class DegenerateInput(ValueError):
    pass


class StepOutsideDomain(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    n: int
    domain: tuple[tuple[float, float], ...]
    sample_grid: tuple[int, ...]

    def __post_init__(self):
        if self.n < 2:
            raise ChartError(f"chart dimension must be >= 2, got {self.n}")
        dom = tuple((float(a), float(b)) for a, b in self.domain)
        grid = tuple(int(k) for k in self.sample_grid)
        if len(dom) != self.n or len(grid) != self.n:
            raise ChartError("domain and sample_grid must have one entry per axis")
        for a, b in dom:
            if not a < b:
                raise ChartError(f"empty interval [{a}, {b}]")
        if any(k < 2 for k in grid):
            raise ChartError("sample counts must be >= 2")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "sample_grid", grid)

    @classmethod
    def box(cls, n: int, lo: float = -1.0, hi: float = 1.0, grid: int = 3) -> "Chart":
        return cls(n, ((lo, hi),) * n, (grid,) * n)

    @property
    def lower(self) -> np.ndarray:
        return np.array([a for a, _ in self.domain])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b for _, b in self.domain])

    def contains(self, p: Sequence[float]) -> bool:
        p = np.asarray(p, dtype=float)
        return p.shape == (self.n,) and bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def with_grid(self, grid: int | Sequence[int]) -> "Chart":
        if isinstance(grid, int):
            grid = (grid,) * self.n
        return Chart(self.n, self.domain, tuple(grid))

    def grid_points(self) -> np.ndarray:
        """All sample-grid points, endpoints included, in C order."""
        axes = [np.linspace(a, b, k) for (a, b), k in zip(self.domain, self.sample_grid)]
        return np.array(list(itertools.product(*axes)), dtype=float)

    def random_points(self, rng: np.random.Generator, m: int, margin: float = 0.05) -> np.ndarray:
        """``m`` uniform points in the box shrunk by ``margin`` of each side length."""
        lo, hi = self.lower, self.upper
        w = hi - lo
        return rng.uniform(lo + margin * w, hi - margin * w, size=(m, self.n))


@dataclass(frozen=True)
class TensorValue:
    """Dense components at a point; ``variance`` holds 'u'/'d' per index."""

    components: np.ndarray
    variance: str
    symmetries: tuple[tuple[int, int, str], ...] = ()

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.ndim != len(self.variance):
            raise ValueError("variance string must name every index")
        object.__setattr__(self, "components", comps)

    def symmetry_residual(self) -> float:
        worst = 0.0
        for i, j, kind in self.symmetries:
            swapped = np.swapaxes(self.components, i, j)
            diff = self.components - swapped if kind == "sym" else self.components + swapped
            worst = max(worst, float(np.max(np.abs(diff), initial=0.0)))
        return worst

    def check(self, tol: float = 1e-12) -> "TensorValue":
        r = self.symmetry_residual()
        if r > tol:
            raise ValueError(f"declared symmetry violated by {r:.3g}")
        return self

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)


@dataclass(frozen=True)
class Plane:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise DegenerateInput("plane vectors must be two vectors of the same dimension")
        nu, nv = np.linalg.norm(self.u), np.linalg.norm(self.v)
        if nu == 0 or nv == 0:
            raise DegenerateInput("zero vector does not span a plane")
        a, b = self.u / nu, self.v / nv
        if (a @ a) * (b @ b) - (a @ b) ** 2 < GRAM_TOL:
            raise DegenerateInput("plane vectors are linearly dependent")


@dataclass(frozen=True)
class FieldJets:
    """Values and coordinate derivatives of g and A at one point."""

    point: np.ndarray
    g: Jet
    A: Jet

    @property
    def n(self) -> int:
        return self.g.val.shape[0]


ExprLike = Union[el.Expr, str, float, int]


def _as_expr(v: ExprLike, n: int) -> el.Expr:
    if isinstance(v, (int, float)):
        return el.num(v)
    if isinstance(v, str):
        return el.parse(v, n)
    return v


def _canon(key: Sequence[int], rank: int, n: int) -> tuple[int, ...]:
    key = tuple(sorted(int(k) for k in key))
    if len(key) != rank or any(not 0 <= k < n for k in key):
        raise ChartError(f"bad component index {key} for rank {rank}, dimension {n}")
    return key


class StatStructure:
    """A statistical structure presented as a metric ``g`` and cubic form ``A``.

    Components are stored once per sorted multi-index (0-based), so the
    symmetry of ``g`` and full symmetry of ``A`` hold by construction.
    Unspecified metric entries default to the identity, unspecified cubic
    entries to zero.
    """

    def __init__(
        self,
        chart: Chart,
        g_exprs: Mapping[Sequence[int], ExprLike] | None = None,
        A_exprs: Mapping[Sequence[int], ExprLike] | None = None,
        name: str = "",
    ):
        n = chart.n
        self.chart = chart
        self.name = name
        g: dict[tuple[int, ...], el.Expr] = {}
        for i in range(n):
            for j in range(i, n):
                g[(i, j)] = el.num(1.0 if i == j else 0.0)
        seen: set[tuple[int, ...]] = set()
        for key, v in (g_exprs or {}).items():
            k = _canon(key, 2, n)
            if k in seen:
                raise ChartError(f"metric component {k} given twice")
            seen.add(k)
            g[k] = _as_expr(v, n)
        A: dict[tuple[int, ...], el.Expr] = {}
        seen = set()
        for key, v in (A_exprs or {}).items():
            k = _canon(key, 3, n)
            if k in seen:
                raise ChartError(f"cubic component {k} given twice")
            seen.add(k)
            e = _as_expr(v, n)
            if not (isinstance(e, el.Num) and e.value == 0.0):
                A[k] = e
        for e in itertools.chain(g.values(), A.values()):
            if el.max_coordinate(e) >= n:
                raise ChartError("expression references a coordinate beyond the chart dimension")
        self.g_exprs: dict[tuple[int, ...], el.Expr] = g
        self.A_exprs: dict[tuple[int, ...], el.Expr] = A
        self._derivs: dict = {}
        self._jet_cache: dict = {}

    @property
    def n(self) -> int:
        return self.chart.n

    def __repr__(self) -> str:
        label = self.name or "StatStructure"
        return f"<{label} n={self.n} A-components={len(self.A_exprs)}>"

    def replace(self, *, chart: Chart | None = None, A_exprs=None, name=None) -> "StatStructure":
        return StatStructure(
            chart or self.chart,
            self.g_exprs,
            self.A_exprs if A_exprs is None else A_exprs,
            name=self.name if name is None else name,
        )

    def _derivatives(self, key, e: el.Expr, order: int):
        cache_key = (key, order)
        if cache_key not in self._derivs:
            n = self.n
            if order == 1:
                self._derivs[cache_key] = [el.differentiate(e, a) for a in range(n)]
            else:
                first = self._derivatives(key, e, 1)
                self._derivs[cache_key] = {
                    (a, b): el.differentiate(first[a], b) for a in range(n) for b in range(a, n)
                }
        return self._derivs[cache_key]

    def _field_jet(self, exprs, rank: int, tag: str, p, order: int) -> Jet:
        n = self.n
        val = np.zeros((n,) * rank)
        d = np.zeros((n,) + (n,) * rank)
        dd = np.zeros((n, n) + (n,) * rank)
        for key, e in exprs.items():
            perms = set(itertools.permutations(key))
            v = el.evaluate(e, p)
            for q in perms:
                val[q] = v
            if order >= 1:
                for a, de in enumerate(self._derivatives((tag, key), e, 1)):
                    dv = el.evaluate(de, p)
                    for q in perms:
                        d[(a,) + q] = dv
            if order >= 2:
                for (a, b), de in self._derivatives((tag, key), e, 2).items():
                    dv = el.evaluate(de, p)
                    for q in perms:
                        dd[(a, b) + q] = dv
                        dd[(b, a) + q] = dv
        return Jet(val, d, dd)

    def jets_at(self, p: Sequence[float], order: int = 2) -> FieldJets:
        """Evaluate g, A and their symbolic derivatives up to ``order`` at ``p``."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n,):
            raise ChartError(f"point has shape {p.shape}, expected ({self.n},)")
        key = (tuple(p.tolist()), order)
        hit = self._jet_cache.get(key)
        if hit is None:
            for k2 in range(order + 1, 3):
                hit = self._jet_cache.get((key[0], k2))
                if hit is not None:
                    return hit
            pt = tuple(p.tolist())
            hit = FieldJets(
                p.copy(),
                self._field_jet(self.g_exprs, 2, "g", pt, order),
                self._field_jet(self.A_exprs, 3, "A", pt, order),
            )
            if len(self._jet_cache) > 8192:
                self._jet_cache.clear()
            self._jet_cache[key] = hit
        return hit

    def component_values(self, which: str, p: Sequence[float]) -> np.ndarray:
        """Dense values of the ``"g"`` or ``"A"`` components at ``p`` (no derivatives)."""
        pt = tuple(float(x) for x in p)
        if which == "g":
            return self._field_jet(self.g_exprs, 2, "g", pt, 0).val
        if which == "A":
            return self._field_jet(self.A_exprs, 3, "A", pt, 0).val
        raise ValueError(f"unknown field {which!r}")


# ---------------------------------------------------------------------------
# metric and frames


def _check_metric(g: np.ndarray, p=None) -> np.ndarray:
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(np.linalg.eigvalsh(g).min(), p) from None


def metric_at(s: StatStructure, p: Sequence[float]) -> tuple[TensorValue, TensorValue]:
    g = s.component_values("g", p)
    L = _check_metric(g, p)
    n = s.n
    ginv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(n)))
    ginv = 0.5 * (ginv + ginv.T)
    return (
        TensorValue(g, "dd", ((0, 1, "sym"),)),
        TensorValue(ginv, "uu", ((0, 1, "sym"),)),
    )


def gram_schmidt(g: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt of the rows of ``vectors`` with respect to ``g``."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    gram = V @ g @ V.T
    if np.linalg.det(gram) < GRAM_TOL:
        raise DegenerateInput(f"Gram determinant {np.linalg.det(gram):.3g} below {GRAM_TOL}")
    out = V.copy()
    for i in range(len(out)):
        for j in range(i):
            out[i] = out[i] - (out[j] @ g @ out[i]) * out[j]
        nrm = np.sqrt(out[i] @ g @ out[i])
        if nrm < 1e-300:
            raise DegenerateInput("vector collapsed during orthonormalization")
        out[i] = out[i] / nrm
    return out


def orthonormalize(s: StatStructure, p: Sequence[float], vectors) -> np.ndarray:
    """Return a g-orthonormal frame (rows) spanning the same flag as ``vectors``."""
    g = metric_at(s, p)[0].components
    return gram_schmidt(g, vectors)


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """g-orthonormal frame from the coordinate basis, in index order (rows)."""
    return gram_schmidt(g, np.eye(g.shape[0]))


# ---------------------------------------------------------------------------
# finite differences (test oracle only)

FieldSelector = Union[str, Callable[[np.ndarray], np.ndarray]]


def fd_partial(
    s: StatStructure,
    field: FieldSelector,
    p: Sequence[float],
    i: int,
    h: float = 1e-5,
    richardson: bool = False,
) -> TensorValue:
    """Central difference of a component field along axis ``i`` (0-based)."""
    p = np.asarray(p, dtype=float)
    if callable(field):
        func, variance = field, None
    elif field in ("g", "A"):
        func = lambda q: s.component_values(field, q)  # noqa: E731
        variance = "dd" if field == "g" else "ddd"
    else:
        raise ValueError(f"unknown field selector {field!r}")

    def central(step: float) -> np.ndarray:
        e = np.zeros(s.n)
        e[i] = step
        lo, hi = p - e, p + e
        if not (s.chart.contains(lo) and s.chart.contains(hi)):
            raise StepOutsideDomain(f"step {step} along axis {i} leaves the chart domain")
        return (np.asarray(func(hi)) - np.asarray(func(lo))) / (2.0 * step)

    d = central(h)
    if richardson:
        d = (4.0 * central(h / 2.0) - d) / 3.0
    d = np.asarray(d, dtype=float)
    return TensorValue(d, variance if variance is not None else "d" * d.ndim)
