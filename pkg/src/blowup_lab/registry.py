"""Admissible nonlinearities f and quasilinear operators A.

A force is a continuous, nondecreasing f: [0,inf) -> [0,inf) with f(0) = 0,
f > 0 on (0,inf) and f(t) -> inf, together with its primitive
F(t) = int_0^t f.  An operator is described through its flux A(r) = Q(r)*r
with A' > 0, its energy primitive B(x) = int_0^x A'(s)*s ds, the ceiling
B_sup = lim_{x->inf} B(x), and the inverse B^-1 on [0, B_sup).

Everything downstream (blow-up functionals, 1D profiles, radial shooting,
the 2D solver) consumes only these two objects, so construction validates
the structural assumptions once, on a fixed sample grid.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainExceededError, ValidationError

# validation grid: {0} plus 49 log-spaced points in [1e-6, 1e6]
_GRID = np.concatenate(([0.0], np.logspace(-6.0, 6.0, 49)))


@dataclass(frozen=True, eq=False)
class Force:
    """A nonlinearity f with its exact primitive F and growth metadata.

    ``growth_zero`` / ``growth_inf`` are the power-law exponents of f near 0
    and near infinity when known analytically (None otherwise, e.g. the
    superpolynomial tail of exp-minus-one).
    """

    kind: str
    value: Callable[[np.ndarray | float], np.ndarray | float]
    primitive: Callable[[np.ndarray | float], np.ndarray | float]
    growth_zero: Optional[float]
    growth_inf: Optional[float]
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.value(t)

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True, eq=False)
class Operator:
    """A quasilinear operator through A(r) = Q(r)*r and its energy primitive.

    ``energy_sup`` is B_sup; finite ceilings (mean curvature) make
    ``energy_inverse`` a partial function and consumers must check the
    ceiling before integrating, otherwise :class:`DomainExceededError`.
    """

    kind: str
    flux: Callable                 # A(r)
    flux_prime: Callable           # A'(r)
    flux_inverse: Callable         # A^-1(z), used by IVP-based oracles
    energy: Callable               # B(x)
    energy_inverse: Callable       # B^-1(y) on [0, B_sup)
    energy_sup: float              # B_sup, may be math.inf
    params: dict = field(default_factory=dict)

    @property
    def p(self) -> float:
        """Exponent for p-laplace operators; raises for other kinds."""
        if self.kind != "p-laplace":
            raise ValidationError(f"operator kind {self.kind!r} has no exponent p")
        return self.params["p"]

    def coefficient(self, r):
        """Q(r) = A(r)/r for r > 0."""
        return self.flux(r) / r

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params}


# ---------------------------------------------------------------------------
# forces
# ---------------------------------------------------------------------------

def _power_force(q: float) -> Force:
    if not q > 0:
        raise ValidationError(f"power force needs q > 0, got {q}")

    def f(t):
        return np.asarray(t, dtype=float) ** q if np.ndim(t) else float(t) ** q

    def F(t):
        if np.ndim(t):
            return np.asarray(t, dtype=float) ** (q + 1.0) / (q + 1.0)
        return float(t) ** (q + 1.0) / (q + 1.0)

    return Force("power", f, F, q, q, {"q": float(q)})


def _exp_minus_one_force() -> Force:
    def f(t):
        return np.expm1(t) if np.ndim(t) else math.expm1(t)

    def F(t):
        # exp(t) - t - 1, stable near 0
        if np.ndim(t):
            return np.expm1(t) - np.asarray(t, dtype=float)
        return math.expm1(t) - float(t)

    return Force("exp-minus-one", f, F, 1.0, None, {})


def _piecewise_power_force(a: float, b: float) -> Force:
    """f(t) = t^a for t <= 1 and t^b for t >= 1 (continuous at the knee).

    Lets the growth at 0 and at infinity be prescribed independently, which a
    single power cannot do; dead cores need a < p-1 < b simultaneously.
    """
    if not (a > 0 and b > 0):
        raise ValidationError(f"piecewise-power force needs a, b > 0, got a={a}, b={b}")
    F_knee = 1.0 / (a + 1.0)

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.where(t <= 1.0, t ** a, t ** b)
        return out if out.ndim else float(out)

    def F(t):
        t = np.asarray(t, dtype=float)
        low = t ** (a + 1.0) / (a + 1.0)
        high = F_knee + (np.where(t >= 1.0, t, 1.0) ** (b + 1.0) - 1.0) / (b + 1.0)
        out = np.where(t <= 1.0, low, high)
        return out if out.ndim else float(out)

    return Force("piecewise-power", f, F, a, b, {"a": float(a), "b": float(b)})


def _table_force(points: Sequence[Sequence[float]]) -> Force:
    """Monotone sampled force, linear between knots, power-law continued
    past the last knot (slope from the final two knots on log-log axes)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValidationError("table force needs >= 3 (t, f) pairs")
    t, ft = pts[:, 0], pts[:, 1]
    if t[0] != 0.0 or ft[0] != 0.0:
        raise ValidationError("table force must start at (0, 0)")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("table force abscissae must be strictly increasing")
    if np.any(np.diff(ft) < 0):
        raise ValidationError("table force values must be nondecreasing")
    if not (ft[-1] > ft[-2] > 0):
        raise ValidationError("table force must be strictly increasing on its last segment")

    tail_exp = (math.log(ft[-1]) - math.log(ft[-2])) / (math.log(t[-1]) - math.log(t[-2]))
    tail_coef = ft[-1] / t[-1] ** tail_exp

    # exact primitive of the piecewise-linear interpolant at the knots
    Fk = np.concatenate(([0.0], np.cumsum(0.5 * (ft[1:] + ft[:-1]) * np.diff(t))))

    def f(x):
        x = np.asarray(x, dtype=float)
        inside = np.interp(x, t, ft)
        out = np.where(x <= t[-1], inside, tail_coef * np.maximum(x, t[-1]) ** tail_exp)
        return out if out.ndim else float(out)

    def F(x):
        x = np.asarray(x, dtype=float)
        xi = np.clip(x, 0.0, t[-1])
        k = np.clip(np.searchsorted(t, xi, side="right") - 1, 0, len(t) - 2)
        dt = xi - t[k]
        slope = (ft[k + 1] - ft[k]) / (t[k + 1] - t[k])
        inside = Fk[k] + ft[k] * dt + 0.5 * slope * dt * dt
        over = np.maximum(x, t[-1])
        tail = Fk[-1] + tail_coef * (over ** (tail_exp + 1.0) - t[-1] ** (tail_exp + 1.0)) / (tail_exp + 1.0)
        out = np.where(x <= t[-1], inside, tail)
        return out if out.ndim else float(out)

    return Force("table", f, F, None, tail_exp,
                 {"points": [[float(a), float(b)] for a, b in pts]})


def _validate_force(force: Force) -> None:
    with np.errstate(over="ignore", invalid="ignore"):
        fv = np.asarray(force.value(_GRID), dtype=float)
        Fv = np.asarray(force.primitive(_GRID), dtype=float)
    if fv[0] != 0.0:
        raise ValidationError(f"f(0) = {fv[0]}, expected 0")
    if np.any(fv[1:] <= 0.0):
        raise ValidationError("f must be positive for t > 0")
    fin = np.isfinite(fv)  # superpolynomial forces overflow at the grid top
    if np.any(np.diff(fv[fin]) < -1e-14 * np.maximum(1.0, fv[fin][1:])):
        raise ValidationError("f must be nondecreasing")
    if not fv[fin][-1] > 10.0 * fv[1]:
        raise ValidationError("f shows no growth toward infinity on the validation grid")
    if abs(Fv[0]) != 0.0:
        raise ValidationError(f"F(0) = {Fv[0]}, expected 0")
    finF = np.isfinite(Fv)
    if np.any(np.diff(Fv[finF]) < 0.0):
        raise ValidationError("F must be nondecreasing")
    # midpoint convexity on consecutive grid pairs (F convex since f nondecreasing)
    grid = _GRID[finF]
    mid = 0.5 * (grid[1:] + grid[:-1])
    with np.errstate(over="ignore", invalid="ignore"):
        Fm = np.asarray(force.primitive(mid), dtype=float)
    FvL, FvR = Fv[finF][:-1], Fv[finF][1:]
    ok = ~np.isfinite(Fm) | (Fm <= 0.5 * (FvL + FvR) * (1.0 + 1e-12) + 1e-300)
    if not np.all(ok):
        raise ValidationError("F failed the sampled convexity check")


def make_force(spec: Optional[dict] = None, **kwargs) -> Force:
    """Build and validate a Force from a description.

    Accepted kinds: ``power`` (q), ``exp-minus-one``, ``piecewise-power``
    (a, b; knee fixed at t=1), ``table`` (points).
    """
    spec = {**(spec or {}), **kwargs}
    kind = spec.get("kind")
    if kind == "power":
        force = _power_force(float(spec["q"]))
    elif kind == "exp-minus-one":
        force = _exp_minus_one_force()
    elif kind == "piecewise-power":
        force = _piecewise_power_force(float(spec["a"]), float(spec["b"]))
    elif kind == "table":
        force = _table_force(spec["points"])
    else:
        raise ValidationError(f"unknown force kind {kind!r}")
    _validate_force(force)
    return force


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _p_laplace(p: float) -> Operator:
    if not p > 1.0:
        raise ValidationError(f"p-laplace needs p > 1, got {p}")
    pm1 = p - 1.0

    def A(r):
        if np.ndim(r):
            r = np.asarray(r, dtype=float)
            return np.sign(r) * np.abs(r) ** pm1
        return math.copysign(abs(r) ** pm1, r)

    def Ap(r):
        if np.ndim(r):
            return pm1 * np.abs(np.asarray(r, dtype=float)) ** (p - 2.0)
        return pm1 * abs(r) ** (p - 2.0)

    def Ainv(z):
        if np.ndim(z):
            z = np.asarray(z, dtype=float)
            return np.sign(z) * np.abs(z) ** (1.0 / pm1)
        return math.copysign(abs(z) ** (1.0 / pm1), z)

    def B(x):
        if np.ndim(x):
            return pm1 / p * np.abs(np.asarray(x, dtype=float)) ** p
        return pm1 / p * abs(x) ** p

    def Binv(y):
        if np.ndim(y):
            return (p * np.asarray(y, dtype=float) / pm1) ** (1.0 / p)
        return (p * y / pm1) ** (1.0 / p)

    return Operator("p-laplace", A, Ap, Ainv, B, Binv, math.inf, {"p": float(p)})


def _mean_curvature() -> Operator:
    def A(r):
        if np.ndim(r):
            r = np.asarray(r, dtype=float)
            return r / np.sqrt(1.0 + r * r)
        return r / math.sqrt(1.0 + r * r)

    def Ap(r):
        if np.ndim(r):
            r = np.asarray(r, dtype=float)
            return (1.0 + r * r) ** -1.5
        return (1.0 + r * r) ** -1.5

    def Ainv(z):
        # |z| < 1 for this operator
        if np.ndim(z):
            z = np.asarray(z, dtype=float)
            return z / np.sqrt(1.0 - z * z)
        return z / math.sqrt(1.0 - z * z)

    def B(x):
        if np.ndim(x):
            x = np.asarray(x, dtype=float)
            return 1.0 - 1.0 / np.sqrt(1.0 + x * x)
        return 1.0 - 1.0 / math.sqrt(1.0 + x * x)

    def Binv(y):
        # (1-y)^-2 - 1 = y(2-y)/(1-y)^2, stable for y near 0
        if np.ndim(y):
            y = np.asarray(y, dtype=float)
            if np.any(y >= 1.0):
                raise DomainExceededError("B^-1 argument reached the ceiling B_sup = 1")
            return np.sqrt(y * (2.0 - y)) / (1.0 - y)
        if y >= 1.0:
            raise DomainExceededError(f"B^-1 argument {y} >= B_sup = 1")
        return math.sqrt(y * (2.0 - y)) / (1.0 - y)

    return Operator("mean-curvature", A, Ap, Ainv, B, Binv, 1.0, {})


def _table_operator(points: Sequence[Sequence[float]]) -> Operator:
    """Flux from a strictly increasing (r, A) table, linear between knots and
    continued with the last slope.  B is the exact segment-wise integral of
    A'(s)*s; B^-1 is monotone bisection to 1e-12 bracket width."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValidationError("table operator needs >= 3 (r, A) pairs")
    r, a = pts[:, 0], pts[:, 1]
    if r[0] != 0.0 or a[0] != 0.0:
        raise ValidationError("table operator must start at (0, 0)")
    if np.any(np.diff(r) <= 0):
        raise ValidationError("table operator abscissae must be strictly increasing")
    slopes = np.diff(a) / np.diff(r)
    if np.any(slopes <= 0):
        raise ValidationError("table operator must have A' > 0 (sampled slopes)")
    # B at the knots: on each segment A' = c_k, so int A'(s) s ds = c_k (s^2 - r_k^2)/2
    Bk = np.concatenate(([0.0], np.cumsum(slopes * 0.5 * (r[1:] ** 2 - r[:-1] ** 2))))

    def A(x):
        x = np.asarray(x, dtype=float)
        s = np.sign(x)
        ax = np.abs(x)
        inside = np.interp(ax, r, a)
        out = s * np.where(ax <= r[-1], inside, a[-1] + slopes[-1] * (ax - r[-1]))
        return out if out.ndim else float(out)

    def Ap(x):
        x = np.abs(np.asarray(x, dtype=float))
        k = np.clip(np.searchsorted(r, x, side="right") - 1, 0, len(r) - 2)
        out = np.where(x <= r[-1], slopes[k], slopes[-1])
        return out if out.ndim else float(out)

    def Ainv(z):
        z = np.asarray(z, dtype=float)
        s = np.sign(z)
        az = np.abs(z)
        inside = np.interp(az, a, r)
        out = s * np.where(az <= a[-1], inside, r[-1] + (az - a[-1]) / slopes[-1])
        return out if out.ndim else float(out)

    def B(x):
        x = np.abs(np.asarray(x, dtype=float))
        xi = np.clip(x, 0.0, r[-1])
        k = np.clip(np.searchsorted(r, xi, side="right") - 1, 0, len(r) - 2)
        inside = Bk[k] + slopes[k] * 0.5 * (xi ** 2 - r[k] ** 2)
        over = np.maximum(x, r[-1])
        out = np.where(x <= r[-1], inside, Bk[-1] + slopes[-1] * 0.5 * (over ** 2 - r[-1] ** 2))
        return out if out.ndim else float(out)

    Bk_list = [float(v) for v in Bk]
    r_list = [float(v) for v in r]
    slopes_list = [float(v) for v in slopes]

    def Binv(y):
        if np.ndim(y):
            return np.array([Binv(float(v)) for v in np.asarray(y, dtype=float).ravel()]).reshape(np.shape(y))
        y = float(y)
        if y == 0.0:
            return 0.0
        if y < 0.0:
            raise DomainExceededError(f"B^-1 argument {y} < 0")
        # bracket inside the containing (quadratic) segment, then bisect
        k = bisect.bisect_right(Bk_list, y) - 1
        if k >= len(slopes_list):
            k = len(slopes_list) - 1
        if y <= Bk_list[-1]:
            lo, hi = r_list[k], r_list[k + 1]
        else:
            lo, hi = r_list[-1], max(2.0 * r_list[-1], 1.0)
            while Bk_list[-1] + slopes_list[-1] * 0.5 * (hi * hi - r_list[-1] ** 2) < y:
                hi *= 2.0
                if hi > 1e160:
                    raise DomainExceededError("B^-1 bracket expansion overflow")

        def B_local(x):
            if x <= r_list[-1]:
                kk = min(bisect.bisect_right(r_list, x) - 1, len(slopes_list) - 1)
                return Bk_list[kk] + slopes_list[kk] * 0.5 * (x * x - r_list[kk] ** 2)
            return Bk_list[-1] + slopes_list[-1] * 0.5 * (x * x - r_list[-1] ** 2)

        while hi - lo > 1e-12 * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if B_local(mid) < y:
                lo = mid
            else:
                hi = mid
        x = 0.5 * (lo + hi)
        # Newton polish (B' = A'(x) x from the table) for small-x relative accuracy
        for _ in range(3):
            deriv = float(Ap(x)) * x
            if deriv <= 0.0:
                break
            x = max(x - (B_local(x) - y) / deriv, 0.0)
        return x

    return Operator("table", A, Ap, Ainv, B, Binv, math.inf,
                    {"points": [[float(u), float(v)] for u, v in pts]})


def _validate_operator(op: Operator) -> None:
    grid = _GRID[1:]
    if float(np.asarray(op.flux(0.0))) != 0.0:
        raise ValidationError("A(0) must be 0")
    Apv = np.asarray(op.flux_prime(grid), dtype=float)
    if np.any(Apv <= 0.0):
        raise ValidationError("A' must be positive for r > 0 (sampled check)")
    Bv = np.asarray(op.energy(grid), dtype=float)
    if float(np.asarray(op.energy(0.0))) != 0.0 or np.any(np.diff(Bv) <= 0.0):
        raise ValidationError("B must vanish at 0 and be strictly increasing")
    # Q(r) * r == A(r) on the sampled grid
    qr = np.asarray(op.coefficient(grid), dtype=float) * grid
    if np.max(np.abs(qr - np.asarray(op.flux(grid), dtype=float))) > 1e-12 * np.max(np.abs(qr)):
        raise ValidationError("Q(r)*r must equal A(r)")
    # round trip B(B^-1(y)) = y on [0, 0.99 B_sup)
    if math.isinf(op.energy_sup):
        ys = np.logspace(-6, math.log10(float(np.asarray(op.energy(1e6)))), 25)
    else:
        ys = np.linspace(1e-6, 0.99 * op.energy_sup, 25)
    for y in ys:
        x = op.energy_inverse(float(y))
        back = float(np.asarray(op.energy(x)))
        if abs(back - y) > 1e-10 * max(abs(y), 1e-300):
            raise ValidationError(f"B(B^-1({y})) = {back}, round trip off by {abs(back - y):.2e}")


def make_operator(spec: Optional[dict] = None, **kwargs) -> Operator:
    """Build and validate an Operator.

    Accepted kinds: ``p-laplace`` (p > 1), ``mean-curvature``, ``table``
    (points sampling an increasing flux A).
    """
    spec = {**(spec or {}), **kwargs}
    kind = spec.get("kind")
    if kind == "p-laplace":
        op = _p_laplace(float(spec["p"]))
    elif kind == "mean-curvature":
        op = _mean_curvature()
    elif kind == "table":
        op = _table_operator(spec["points"])
    else:
        raise ValidationError(f"unknown operator kind {kind!r}")
    _validate_operator(op)
    return op
