"""Blow-up functionals and growth-condition classification.

Psi(r) = int_r^inf ds / B^-1{F(s)} is the distance-to-blow-up functional:
its convergence for every r > 0 is the Keller-Osserman condition.  The
behaviour of the same integrand at 0+ separates the Osgood regime
(divergent, solutions cannot leave zero data) from the dead-core regime
(convergent, with a finite total length L = int_0^inf).  Phi is the inverse
of Psi and gives the universal boundary blow-up rate Phi(d) at distance d.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import quadrature as qk
from .errors import BlowupLabError, DivergenceError, DomainExceededError
from .registry import Force, Operator


def psi(op: Operator, force: Force, r: float) -> float:
    """Tail integral int_r^inf ds / B^-1{F(s)} to ~1e-9 relative.

    Raises :class:`DivergenceError` when the tail does not decay (the
    Keller-Osserman condition fails) and :class:`DomainExceededError` when a
    finite energy ceiling is reached inside the range.
    """
    if not r > 0.0:
        raise ValueError("psi needs r > 0")
    est = qk.shifted_tail(op, force, 0.0, r)
    return qk.require_converged(est, f"Psi({r:g})")


def length_scale(op: Operator, force: Force, max_blocks: int = qk.MAX_BLOCKS) -> float:
    """L = int_0^inf ds / B^-1{F(s)}; finite only in the dead-core regime."""
    crossing = qk.ceiling_crossing(op, force)
    if crossing is not None:
        raise DomainExceededError(
            f"F reaches B_sup = {op.energy_sup:g} at s ~ {crossing:.6g}")
    g = qk.shifted_integrand(op, force, 0.0)
    low = qk.require_converged(qk.integrate_to_zero(g, 1.0, max_blocks=max_blocks),
                               "int_0^1 ds/B^-1{F}")
    high = qk.require_converged(qk.integrate_to_infinity(g, 1.0, max_blocks=max_blocks),
                                "Psi(1)")
    return low + high


@dataclass(frozen=True)
class KOReport:
    """Classification of the growth conditions for one (operator, force) pair.

    ``ko_holds`` / ``osgood_holds`` / ``a3_holds`` are None when the check is
    undecidable because the operator's energy ceiling is reached (finite
    B_sup); the diagnostics then carry the crossing location.
    """

    ko_holds: Optional[bool]
    osgood_holds: Optional[bool]
    a3_holds: Optional[bool]
    L: Optional[float]
    frontier: Optional[str]
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "ko_holds": self.ko_holds,
            "osgood_holds": self.osgood_holds,
            "a3_holds": self.a3_holds,
            "L": self.L,
            "frontier": self.frontier,
            "diagnostics": self.diagnostics,
        }, indent=2, sort_keys=True)


def _frontier_note(op: Operator, force: Force) -> Optional[str]:
    if op.kind != "p-laplace":
        return None
    p = op.p
    parts = []
    if force.growth_inf is not None:
        e = (force.growth_inf + 1.0) / p
        verdict = "convergent (KO holds)" if e > 1.0 else "divergent (KO fails)"
        parts.append(f"tail exponent (q_inf+1)/p = {e:.6g} vs 1 -> {verdict}")
    if force.growth_zero is not None:
        e0 = (force.growth_zero + 1.0) / p
        verdict = "divergent (Osgood)" if e0 >= 1.0 else "convergent (dead-core side)"
        parts.append(f"zero exponent (q_0+1)/p = {e0:.6g} vs 1 -> {verdict}")
    return "; ".join(parts) if parts else None


def classify(op: Operator, force: Force) -> KOReport:
    """Classify KO / Osgood / dead-core by quadrature; never decides past a
    finite energy ceiling (reports the crossing instead)."""
    diagnostics: dict = {}
    crossing = qk.ceiling_crossing(op, force)

    ko: Optional[bool]
    if crossing is not None:
        ko = None
        diagnostics["domain_exceeded"] = (
            f"F(s) reaches B_sup = {op.energy_sup:g} at s ~ {crossing:.6g}; "
            "the tail condition is undecidable for this operator")
        diagnostics["ceiling_crossing"] = crossing
    else:
        try:
            est = qk.integrate_to_infinity(qk.shifted_integrand(op, force, 0.0), 1.0)
            if est.converged:
                ko = True
                diagnostics["psi_at_1"] = est.value
                diagnostics["tail_cap"] = est.cap
            else:
                ko = False
                diagnostics["tail_last_ratio"] = est.last_ratio
        except DomainExceededError as exc:  # defensive; crossing check should catch
            ko = None
            diagnostics["domain_exceeded"] = str(exc)

    # 0+ side; only needs F below the ceiling on (0, s_hi]
    s_hi = 1.0 if crossing is None else min(1.0, 0.5 * crossing)
    g = qk.shifted_integrand(op, force, 0.0)
    zero_est = qk.integrate_to_zero(g, s_hi)
    if zero_est.converged:
        osgood, a3 = False, True
        diagnostics["zero_integral"] = zero_est.value
    else:
        osgood, a3 = True, False
        diagnostics["zero_last_ratio"] = zero_est.last_ratio

    L: Optional[float] = None
    if a3 and ko:
        L = zero_est.value + qk.require_converged(
            qk.integrate_to_infinity(g, s_hi), "Psi tail for L")
        diagnostics["zero_blocks"] = zero_est.blocks_used

    return KOReport(ko, osgood, a3, L, _frontier_note(op, force), diagnostics)


# ---------------------------------------------------------------------------
# the blow-up rate Phi = Psi^-1
# ---------------------------------------------------------------------------

@dataclass
class BlowupRateFn:
    """Psi and its monotone inverse Phi, valid for d in (0, Psi(r_min))."""

    op: Operator
    force: Force
    r_min: float = 1e-8
    r_max: float = 1e14

    def psi(self, r: float) -> float:
        return psi(self.op, self.force, r)

    def validity_range(self) -> tuple[float, float]:
        return (self.psi(self.r_max), self.psi(self.r_min))

    def phi(self, d: float) -> float:
        """Invert Psi by bracketed root finding, rel tol 1e-8."""
        if not d > 0.0:
            raise ValueError("phi needs d > 0")
        lo, hi = self.r_min, 1.0
        # Psi decreasing: want Psi(hi) <= d <= Psi(lo)
        while self.psi(hi) > d:
            hi *= 4.0
            if hi > self.r_max:
                raise BlowupLabError(f"phi({d:g}): no bracket below r_max = {self.r_max:g}")
        while self.psi(lo) < d:
            lo /= 4.0
            if lo < 1e-300:
                raise BlowupLabError(f"phi({d:g}): d exceeds the validity range")
        return brentq(lambda r: self.psi(r) - d, lo, hi, rtol=1e-10, xtol=1e-300)


def phi(rate: BlowupRateFn, d: float) -> float:
    return rate.phi(d)


# ---------------------------------------------------------------------------
# asymptotic-uniqueness ratio check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class A5Report:
    """Sampled infimum of Psi(beta*t)/Psi(t) per beta on a log grid in t.

    A limit statement is not finitely checkable: ``likely_holds`` only means
    the sampled infimum stayed above 1 + margin on the grid tail.
    """

    betas: tuple
    infima: tuple
    margins: tuple
    likely_holds: bool
    t_grid: tuple
    ratios: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "betas": list(self.betas),
            "infima": list(self.infima),
            "margins": list(self.margins),
            "likely_holds": self.likely_holds,
        }, indent=2, sort_keys=True)


def check_a5(force: Force, op: Operator, betas: Sequence[float],
             t_lo: float = 1e2, t_hi: float = 1e6, n_t: int = 17,
             margin: float = 1e-3) -> A5Report:
    """Evaluate Psi(beta*t)/Psi(t) on a log grid and report running infima."""
    for b in betas:
        if not 0.0 < b < 1.0:
            raise ValueError(f"beta must lie in (0,1), got {b}")
    ts = np.logspace(math.log10(t_lo), math.log10(t_hi), n_t)
    psi_t = {float(t): psi(op, force, float(t)) for t in ts}
    infima, margins, ratios = [], [], {}
    for b in betas:
        rs = [psi(op, force, b * float(t)) / psi_t[float(t)] for t in ts]
        ratios[b] = rs
        inf_tail = min(rs[len(rs) // 2:])   # sampled infimum on the grid tail
        infima.append(min(rs))
        margins.append(inf_tail - 1.0)
    likely = all(m > margin for m in margins)
    return A5Report(tuple(float(b) for b in betas), tuple(infima), tuple(margins),
                    likely, tuple(float(t) for t in ts), ratios)
