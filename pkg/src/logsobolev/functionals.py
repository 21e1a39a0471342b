"""Scalar functionals of probes: norms, entropy, Fisher information, moments,
deficit, and the 1-D quadratic Wasserstein distance to the Gaussian.

All quantities are computed by breakpoint-aware adaptive quadrature; the
closed forms stored in probe tables serve as independent cross-checks, never
as the computation path.  Integrands over exponential-quadratic pieces are
assembled in log space so that far tails (where the profile alone overflows)
are evaluated stably.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quad
from .probes import Piece, ProbeFunction, TailBehavior
from .probes import gauss_to_euclid, euclid_to_gauss  # noqa: F401  (re-exported API)

LOG_2PI = math.log(2.0 * math.pi)

# polynomial degree of the extra factor each functional kind multiplies in
_KIND_DEGREE = {"sq": 0, "sq_x": 1, "sq_x2": 2, "ent": 2, "absent": 2,
                "grad": 2, "dist1": 0, "powp": 0, "tilt_v": 0, "tilt_dv": 1}
# power applied to the profile
_KIND_POWER = {"sq": 2.0, "sq_x": 2.0, "sq_x2": 2.0, "ent": 2.0, "absent": 2.0,
               "grad": 2.0, "dist1": 1.0, "tilt_v": 1.0, "tilt_dv": 1.0}


def _surface_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d."""
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


def _entropy_term(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    m = t > 0.0
    out[m] = t[m] * np.log(t[m])
    return out


def _piece_integrand(piece: Piece, kind: str, logw: Callable, p: float = 2.0,
                     tau: float = 0.0) -> Callable:
    """Vectorised integrand of one functional kind over one piece."""
    if piece.kind == "zero":
        if kind == "dist1":
            return lambda x: np.exp(logw(x))
        return lambda x: np.zeros_like(x)

    if piece.kind == "expquad":
        pp, qq, rr = piece.coeffs
        s = piece.sign
        L = lambda x: (pp * x + qq) * x + rr
        if kind == "sq":
            return lambda x: np.exp(2.0 * L(x) + logw(x))
        if kind == "sq_x":
            return lambda x: x * np.exp(2.0 * L(x) + logw(x))
        if kind == "sq_x2":
            return lambda x: x * x * np.exp(2.0 * L(x) + logw(x))
        if kind == "ent":
            return lambda x: 2.0 * L(x) * np.exp(2.0 * L(x) + logw(x))
        if kind == "absent":
            return lambda x: np.abs(2.0 * L(x)) * np.exp(2.0 * L(x) + logw(x))
        if kind == "grad":
            return lambda x: (2.0 * pp * x + qq) ** 2 * np.exp(2.0 * L(x) + logw(x))
        if kind == "dist1":
            def f(x):
                lv = L(x)
                big = lv > 30.0
                out = np.abs(s * np.exp(np.where(big, 0.0, lv)) - 1.0) * np.exp(logw(x))
                if np.any(big):
                    out = np.where(big, np.exp(lv + logw(x)), out)
                return out
            return f
        if kind == "powp":
            return lambda x: np.exp(p * L(x) + logw(x))
        if kind == "tilt_v":
            return lambda x: s * np.exp(L(x) + tau * x + logw(x))
        if kind == "tilt_dv":
            return lambda x: (2.0 * pp * x + qq) * s * np.exp(L(x) + tau * x + logw(x))
        raise ValueError(f"unknown functional kind {kind!r}")

    fn, dfn = piece.fn, piece.dfn
    if kind == "sq":
        return lambda x: fn(x) ** 2 * np.exp(logw(x))
    if kind == "sq_x":
        return lambda x: x * fn(x) ** 2 * np.exp(logw(x))
    if kind == "sq_x2":
        return lambda x: x * x * fn(x) ** 2 * np.exp(logw(x))
    if kind == "ent":
        return lambda x: _entropy_term(fn(x) ** 2) * np.exp(logw(x))
    if kind == "absent":
        return lambda x: np.abs(_entropy_term(fn(x) ** 2)) * np.exp(logw(x))
    if kind == "grad":
        return lambda x: dfn(x) ** 2 * np.exp(logw(x))
    if kind == "dist1":
        return lambda x: np.abs(fn(x) - 1.0) * np.exp(logw(x))
    if kind == "powp":
        return lambda x: np.abs(fn(x)) ** p * np.exp(logw(x))
    if kind == "tilt_v":
        return lambda x: fn(x) * np.exp(tau * x + logw(x))
    if kind == "tilt_dv":
        return lambda x: dfn(x) * np.exp(tau * x + logw(x))
    raise ValueError(f"unknown functional kind {kind!r}")


def _logw_for(probe: ProbeFunction) -> tuple[Callable, float]:
    """Log-weight of the probe's base measure and its quadratic coefficient."""
    if probe.mode == "gaussian":
        if probe.structure == "coordinate":
            return (lambda x: -0.5 * x * x - 0.5 * LOG_2PI), -0.5
        d = probe.d
        log_s = math.log(_surface_area(d))

        def logw(x, d=d, log_s=log_s):
            with np.errstate(divide="ignore"):
                return (log_s + (d - 1) * np.log(np.maximum(x, 1e-300))
                        - 0.5 * x * x - 0.5 * d * LOG_2PI)
        return logw, -0.5
    if probe.structure == "coordinate":
        return (lambda x: np.zeros_like(x)), 0.0
    d = probe.d
    log_s = math.log(_surface_area(d))

    def logw(x, d=d, log_s=log_s):
        with np.errstate(divide="ignore"):
            return log_s + (d - 1) * np.log(np.maximum(x, 1e-300))
    return logw, 0.0


_WINDOW_MARGIN = 220.0


def _side_window(tail: TailBehavior, rho: float, tau: float, w_quad: float,
                 support_edge: float, side: int) -> float | None:
    """Truncation point for one side; None means no finite window (algebraic)."""
    if tail.kind == "zero":
        return support_edge
    if tail.kind == "algebraic":
        if w_quad < 0.0:
            return side * 40.0   # Gaussian weight crushes algebraic tails
        return None
    tp, tq, tr = tail.coeffs
    a_coef = rho * tp + w_quad
    b_coef = rho * tq + tau
    if a_coef < 0.0:
        center = -b_coef / (2.0 * a_coef)
        reach = math.sqrt(_WINDOW_MARGIN / -a_coef)
        edge = center + side * reach
    elif a_coef == 0.0 and side * b_coef < 0.0:
        edge = support_edge + side * (_WINDOW_MARGIN / abs(b_coef) + 2.0)
        if not math.isfinite(support_edge):
            edge = side * (_WINDOW_MARGIN / abs(b_coef) + 2.0)
    else:
        raise ValueError("integrand does not decay on this tail")
    if side > 0:
        return max(edge, 9.0 if w_quad < 0 else edge)
    return min(edge, -9.0 if w_quad < 0 else edge)


def _integration_layout(probe: ProbeFunction, kind: str, p: float, tau: float):
    """Segment endpoints and assembled integrand for one functional."""
    logw, w_quad = _logw_for(probe)
    rho = _KIND_POWER.get(kind, 2.0)
    pieces = probe.pieces

    support_lo = pieces[0].hi if pieces[0].kind == "zero" else -math.inf
    support_hi = pieces[-1].lo if pieces[-1].kind == "zero" else math.inf
    if probe.structure == "radial":
        lo = 0.0
    else:
        lo = _side_window(probe.tail_left, rho, tau, w_quad, support_lo, -1)
    hi = _side_window(probe.tail_right, rho, tau, w_quad, support_hi, +1)

    fns = [(pc.lo, pc.hi, _piece_integrand(pc, kind, logw, p, tau)) for pc in pieces]

    def f(x):
        out = np.zeros_like(x)
        for i, (a, b, g) in enumerate(fns):
            if i == len(fns) - 1:
                m = (x >= a) & (x <= b)
            else:
                m = (x >= a) & (x < b)
            if np.any(m):
                out[m] = g(x[m])
        return out

    inner = [b for b in probe.breakpoints]
    inner += [z for z in probe.interior_zeros]
    if probe.structure == "radial":
        base_lo = 0.0
    else:
        base_lo = lo
    return base_lo, hi, sorted(set(inner)), f


def _algebraic_tail_bound(probe: ProbeFunction, kind: str) -> Callable[[float], float]:
    """Analytic truncation-remainder bound for algebraically decaying probes."""
    tail = probe.tail_right
    kappa = _KIND_DEGREE[kind]
    extra = probe.d - 1 if probe.structure == "radial" else 0
    beta = 2.0 * tail.power + kappa + extra
    lam = 2.0 * tail.log_power + (1.0 if kind in ("ent", "absent") else 0.0)
    sides = 1 if probe.structure == "radial" else 2

    def h_mag(r: float) -> float:
        v = float(probe.value(np.array([r]))[0])
        if kind == "grad":
            v = float(probe.derivative(np.array([r]))[0])
            return v * v * r ** extra
        base = v * v * r ** (kappa + extra)
        if kind in ("ent", "absent"):
            base *= abs(2.0 * math.log(abs(v))) if v != 0 else 0.0
        return base

    def bound(r: float) -> float:
        h = h_mag(r)
        if beta < -1.0:
            return sides * r * h / (-beta - 1.0) * 1.5
        if beta == -1.0 and lam < -1.0:
            return sides * r * h * math.log(r) / (-lam - 1.0) * 1.5
        return math.inf

    return bound


def probe_integral(probe: ProbeFunction, kind: str,
                   rule: quad.QuadratureRule = quad.DEFAULT_RULE,
                   p: float = 2.0, tau: float = 0.0) -> quad.IntegralResult:
    """One scalar functional of a probe by adaptive quadrature.

    Kinds: "sq" (L^2 mass), "sq_x"/"sq_x2" (first/second profile moments),
    "ent" (entropy integrand), "absent" (its absolute value), "grad"
    (squared profile derivative), "dist1" (L^1 distance to the constant 1,
    Gaussian mode), "powp" (|v|**p mass), "tilt_v"/"tilt_dv" (v or v'
    against exp(tau x), Gaussian mode).
    """
    lo, hi, inner, f = _integration_layout(probe, kind, p, tau)
    if lo is None or hi is None:
        bound = _algebraic_tail_bound(probe, kind)
        return quad.integrate_lebesgue(f, inner, rule, tail_bound=bound)
    pts = sorted({lo, hi, *(b for b in inner if lo < b < hi)})
    return quad.integrate_segments(f, pts, rule)


@dataclass
class FunctionalReport:
    """Every scalar functional of a probe, with per-entry error estimates.

    ``entropy`` is the normalisation-free relative entropy
    integral of |v|^2 log(|v|^2/||v||^2); ``entropy_raw`` drops the
    normalisation.  ``deficit`` is the margin of the mode's base inequality
    (Gaussian: Fisher - entropy/2; Euclidean: the same minus the dimensional
    constant d/4 log(2 pi e^2) ||u||^2).
    """

    mode: str
    d: int
    l2_norm2: float
    fisher: float
    entropy: float
    entropy_raw: float
    abs_entropy: float
    first_moment: tuple[float, ...]
    second_moment: float
    deficit: float
    l1_distance_to_one: float | None
    nonnegative: bool
    errors: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    probe_spec: dict = field(default_factory=dict)

    @property
    def quadrature_error(self) -> float:
        finite = [e for e in self.errors.values() if math.isfinite(e)]
        return max(finite) if finite else 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "d": self.d,
            "probe": self.probe_spec,
            "values": {
                "l2_norm2": self.l2_norm2,
                "fisher": self.fisher,
                "entropy": self.entropy,
                "entropy_raw": self.entropy_raw,
                "abs_entropy": self.abs_entropy,
                "first_moment": list(self.first_moment),
                "second_moment": self.second_moment,
                "deficit": self.deficit,
                "l1_distance_to_one": self.l1_distance_to_one,
            },
            "errors": dict(self.errors),
            "flags": dict(self.flags),
            "nonnegative": self.nonnegative,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def report(probe: ProbeFunction,
           rule: quad.QuadratureRule = quad.DEFAULT_RULE) -> FunctionalReport:
    """Compute the full functional report of a probe by quadrature."""
    errors: dict[str, float] = {}
    flags: dict[str, str] = {}

    def run(name: str, kind: str) -> float:
        res = probe_integral(probe, kind, rule)
        errors[name] = res.error_estimate
        if res.diverging:
            flags[name] = "divergent"
        elif not res.converged:
            flags[name] = "not-converged"
        return res.value

    l2 = run("l2_norm2", "sq")
    fisher = run("fisher", "grad")
    ent_raw = run("entropy_raw", "ent")
    abs_ent = run("abs_entropy", "absent")
    if probe.symmetry == "even" or probe.structure == "radial":
        m1 = 0.0
        errors["first_moment"] = 0.0
    else:
        m1 = run("first_moment", "sq_x")
    m2_profile = run("second_moment", "sq_x2")

    if probe.structure == "coordinate" and probe.d > 1:
        second = m2_profile + (probe.d - 1) * l2
    else:
        second = m2_profile
    first = tuple([m1] + [0.0] * (probe.d - 1))

    entropy = ent_raw - l2 * math.log(l2) if l2 > 0 else math.nan
    errors["entropy"] = errors["entropy_raw"] + abs(math.log(max(l2, 1e-300)) + 1.0) * errors["l2_norm2"]
    if "entropy_raw" in flags:
        flags["entropy"] = flags["entropy_raw"]

    if probe.mode == "gaussian":
        deficit = fisher - 0.5 * entropy
    else:
        deficit = fisher - 0.5 * entropy - 0.25 * probe.d * (LOG_2PI + 2.0) * l2
    errors["deficit"] = errors["fisher"] + 0.5 * errors["entropy"]

    l1_one = None
    if probe.mode == "gaussian":
        res = probe_integral(probe, "dist1", rule)
        l1_one = res.value
        errors["l1_distance_to_one"] = res.error_estimate

    return FunctionalReport(
        mode=probe.mode, d=probe.d, l2_norm2=l2, fisher=fisher,
        entropy=entropy, entropy_raw=ent_raw, abs_entropy=abs_ent,
        first_moment=first, second_moment=second, deficit=deficit,
        l1_distance_to_one=l1_one, nonnegative=probe.nonnegative,
        errors=errors, flags=flags,
        probe_spec=dict(probe.family_spec) if probe.family_spec else {},
    )


def ckp_lower_bound(rep: FunctionalReport) -> float:
    """Quadratic transport-style lower bound (1/4)(integral |v-1| dgamma)^2.

    Requires a nonnegative, unit-norm Gaussian-mode report; dominated by the
    relative entropy on every admissible probe.
    """
    if rep.mode != "gaussian":
        raise ValueError("mode mismatch: Gaussian-mode report required")
    if abs(rep.l2_norm2 - 1.0) > 1e-6:
        raise ValueError("probe must be L2(gamma)-normalised")
    if not rep.nonnegative:
        raise ValueError("probe must be nonnegative")
    if rep.l1_distance_to_one is None:
        raise ValueError("report carries no L1 distance")
    return 0.25 * rep.l1_distance_to_one ** 2


# ---------------------------------------------------------------------------
# 1-D quadratic Wasserstein distance to the Gaussian
# ---------------------------------------------------------------------------

class _CdfInverter:
    """Piecewise cumulative mass of |v|^2 dgamma with vectorised inversion."""

    def __init__(self, probe: ProbeFunction, rule: quad.QuadratureRule):
        lo, hi, inner, f = _integration_layout(probe, "sq", 2.0, 0.0)
        self.f = f
        edges = [lo] + [b for b in inner if lo < b < hi] + [hi]
        fine: list[np.ndarray] = []
        for a, b in zip(edges, edges[1:]):
            n_sub = max(24, int(math.ceil((b - a) * 12.0)))
            fine.append(np.linspace(a, b, n_sub + 1)[:-1])
        self.grid = np.concatenate(fine + [np.array([hi])])
        xs, ws = quad.gauss_legendre_rule(21)
        a = self.grid[:-1]
        b = self.grid[1:]
        mid = 0.5 * (a + b)[:, None]
        half = 0.5 * (b - a)[:, None]
        nodes = mid + half * xs[None, :]
        vals = f(nodes.ravel()).reshape(nodes.shape)
        self.masses = (half[:, 0]) * (vals @ ws)
        if np.any(self.masses < -1e-12):
            raise RuntimeError("CDF increments went negative; non-monotone CDF")
        self.cum = np.concatenate([[0.0], np.cumsum(np.maximum(self.masses, 0.0))])
        self.total = float(self.cum[-1])
        self._xs, self._ws = xs, ws

    def cdf_at_grid(self, i: int) -> float:
        return float(self.cum[i])

    def _local_mass(self, a: np.ndarray, x: np.ndarray) -> np.ndarray:
        half = 0.5 * (x - a)
        mid = 0.5 * (x + a)
        nodes = mid[:, None] + half[:, None] * self._xs[None, :]
        vals = self.f(nodes.ravel()).reshape(nodes.shape)
        return half * (vals @ self._ws)

    def inverse(self, p: np.ndarray) -> np.ndarray:
        """Quantiles of the normalised measure at levels p (vectorised)."""
        t = np.clip(p * self.total, 0.0, self.total)
        idx = np.clip(np.searchsorted(self.cum, t, side="right") - 1, 0,
                      len(self.masses) - 1)
        lo = self.grid[idx].copy()
        hi = self.grid[idx + 1].copy()
        base = self.cum[idx]
        a = self.grid[idx]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = base + self._local_mass(a, mid)
            too_low = fm < t
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
            if np.max(hi - lo) < 1e-13:
                break
        return 0.5 * (lo + hi)


def w2_distance_1d(probe: ProbeFunction,
                   rule: quad.QuadratureRule = quad.DEFAULT_RULE) -> float:
    """W2 distance between |v|^2 dgamma and gamma via the quantile formula.

    Builds the CDF of |v|^2 dgamma by piecewise quadrature, inverts it, and
    integrates the squared quantile mismatch against the Gaussian levels:
    W2^2 = integral (F^{-1}(Phi(s)) - s)^2 dgamma(s).  Returns the distance
    (not squared).
    """
    if probe.mode != "gaussian" or probe.d != 1 or probe.structure != "coordinate":
        raise ValueError("W2 is provided for 1-D Gaussian-mode probes")
    inv = _CdfInverter(probe, rule)
    if abs(inv.total - 1.0) > 1e-6:
        raise ValueError("probe measure is not normalised; W2 needs ||v||_2 = 1")

    s_breaks = []
    for i in (np.searchsorted(inv.grid, b) for b in probe.breakpoints):
        if 0 < i < len(inv.cum):
            level = inv.cum[i] / inv.total
            if 1e-14 < level < 1.0 - 1e-14:
                s_breaks.append(float(quad.normal_quantile(level)))
    s_max = 8.5

    def integrand(s):
        q = inv.inverse(quad.normal_cdf(s))
        return (q - s) ** 2 * quad.normal_pdf(s)

    pts = sorted({-s_max, s_max, *(b for b in s_breaks if -s_max < b < s_max)})
    res = quad.integrate_segments(integrand, pts, rule.with_tol(max(rule.tol, 1e-9)))
    return math.sqrt(max(res.value, 0.0))


def rescale_to_zero_entropy(u: ProbeFunction,
                            rule: quad.QuadratureRule = quad.DEFAULT_RULE) -> ProbeFunction:
    """Dilate a Euclidean probe so its raw entropy integral vanishes.

    Uses the exact shift entropy(u_lambda) = entropy(u) + d log(lambda) ||u||^2
    under u_lambda = lambda^{d/2} u(lambda .).
    """
    from .probes import scale_probe
    rep = report(u, rule)
    if "entropy_raw" in rep.flags:
        raise ValueError("entropy integral does not converge; cannot rescale")
    lam = math.exp(-rep.entropy_raw / (u.d * rep.l2_norm2))
    return scale_probe(u, lam)
