"""Second-order jets (value, gradient, Hessian) of tensor fields at a point.

Derivative axes always lead: ``d[a, ...]`` is the partial along axis ``a``
and ``dd[a, b, ...]`` the mixed second partial.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

_DA, _DB = "P", "Q"


@dataclass(frozen=True)
class Jet:
    val: np.ndarray
    d: np.ndarray
    dd: np.ndarray

    @property
    def dim(self) -> int:
        return self.d.shape[0]


def jet_einsum(subscripts: str, *jets: Jet) -> Jet:
    """Contract jets like :func:`numpy.einsum`, propagating the product rule."""
    ins, out = subscripts.replace(" ", "").split("->")
    terms = ins.split(",")
    if len(terms) != len(jets):
        raise ValueError("operand count does not match subscripts")
    if _DA in subscripts or _DB in subscripts:
        raise ValueError(f"subscripts may not use {_DA!r} or {_DB!r}")
    vals = [j.val for j in jets]

    def contract(spec_terms, ops, spec_out):
        return np.einsum(",".join(spec_terms) + "->" + spec_out, *ops, optimize=True)

    val = contract(terms, vals, out)

    d = 0.0
    for k, jet in enumerate(jets):
        t = list(terms)
        ops = list(vals)
        t[k] = _DA + t[k]
        ops[k] = jet.d
        d = d + contract(t, ops, _DA + out)

    dd = 0.0
    for k, jet in enumerate(jets):
        t = list(terms)
        ops = list(vals)
        t[k] = _DA + _DB + t[k]
        ops[k] = jet.dd
        dd = dd + contract(t, ops, _DA + _DB + out)
    for k, l in permutations(range(len(jets)), 2):
        t = list(terms)
        ops = list(vals)
        t[k] = _DA + t[k]
        ops[k] = jets[k].d
        t[l] = _DB + t[l]
        ops[l] = jets[l].d
        dd = dd + contract(t, ops, _DA + _DB + out)
    return Jet(np.asarray(val), np.asarray(d), np.asarray(dd))


def jet_inverse(g: Jet) -> Jet:
    """Jet of the matrix inverse, from d(G^-1) = -G^-1 dG G^-1."""
    gi = np.linalg.inv(g.val)
    gi = 0.5 * (gi + gi.T)
    dgi = -np.einsum("ij,ajk,kl->ail", gi, g.d, gi)
    ddgi = -(
        np.einsum("bij,ajk,kl->abil", dgi, g.d, gi)
        + np.einsum("ij,abjk,kl->abil", gi, g.dd, gi)
        + np.einsum("ij,ajk,bkl->abil", gi, g.d, dgi)
    )
    return Jet(gi, dgi, ddgi)
