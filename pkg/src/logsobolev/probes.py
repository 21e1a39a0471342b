"""Piecewise-analytic test functions for the Gaussian and Euclidean entropy
functionals.

A probe is a 1-D profile (either along one coordinate of R^d, or radial)
made of contiguous pieces.  Pieces are either exact exponential-quadratic
expressions, whose coefficients let the integrators combine exponents and
avoid overflow in far tails, or plain vectorised callables.  Named families:

* ``constant`` / ``optimizer`` / ``squeeze`` / ``hermite`` / ``tangent`` --
  Gaussian-mode probes around the constant function;
* ``example1`` -- an equal-mass comb of shifted bumps whose Lebesgue entropy
  drifts to -infinity while the H^1(dx) data stay fixed;
* ``example2`` -- an algebraically decaying radial function in H^1(dx) whose
  entropy integral diverges;
* ``prop42`` -- an even plateau with matched exponential tails whose deficit
  vanishes while its gradient keeps mass far from the optimizers;
* ``sqrtgamma`` -- Gaussian profiles in Euclidean mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import special as sp

from . import quad

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Piece:
    """One piece of a probe profile on [lo, hi).

    ``expquad`` pieces represent sign * exp(p x^2 + q x + r) exactly;
    ``general`` pieces carry vectorised value/derivative callables;
    ``zero`` pieces are identically zero.
    """

    lo: float
    hi: float
    kind: str
    coeffs: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sign: float = 1.0
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    dfn: Callable[[np.ndarray], np.ndarray] | None = None

    def value(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "expquad":
            p, q, r = self.coeffs
            return self.sign * np.exp(p * x * x + q * x + r)
        return self.fn(x)

    def deriv(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "expquad":
            p, q, r = self.coeffs
            return (2.0 * p * x + q) * self.sign * np.exp(p * x * x + q * x + r)
        return self.dfn(x)


@dataclass(frozen=True)
class TailBehavior:
    """Growth bound for a profile as |x| -> infinity.

    |phi(x)| <= exp(p x^2 + q x + r) * |x|**poly_degree, with optional
    algebraic parameters (power, log_power) for probes decaying like
    |x|**power * (log|x|)**log_power (used for truncation-remainder bounds).
    """

    kind: str  # "zero" | "expquad" | "polynomial" | "algebraic"
    coeffs: tuple[float, float, float] = (0.0, 0.0, 0.0)
    poly_degree: int = 0
    power: float = 0.0
    log_power: float = 0.0


ZERO_TAIL = TailBehavior("zero")


@dataclass(frozen=True)
class ProbeFunction:
    """A piecewise-analytic scalar test function on R^d.

    ``structure`` is "coordinate" (profile along one axis, constant in the
    others; the Gaussian measure factorises accordingly) or "radial"
    (profile as a function of |x|).  Pieces tile the line (coordinate) or
    [0, infinity) (radial) without gaps.
    """

    d: int
    mode: str                      # "gaussian" | "euclidean"
    structure: str                 # "coordinate" | "radial"
    pieces: tuple[Piece, ...]
    tail_left: TailBehavior
    tail_right: TailBehavior
    symmetry: str = "none"         # "even" | "none"
    interior_zeros: tuple[float, ...] = ()
    nonnegative: bool = True
    exact_table: Mapping[str, float] = field(default_factory=dict)
    family_spec: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be a positive integer")
        if self.mode not in ("gaussian", "euclidean"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.structure not in ("coordinate", "radial"):
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.mode == "euclidean" and self.structure == "coordinate" and self.d != 1:
            raise ValueError("coordinate probes in Euclidean mode require d = 1")
        lo = 0.0 if self.structure == "radial" else -math.inf
        for piece in self.pieces:
            if not math.isclose(piece.lo, lo) and piece.lo != lo:
                raise ValueError("pieces must tile the domain without gaps")
            lo = piece.hi
        if lo != math.inf:
            raise ValueError("pieces must extend to +infinity")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(p.lo for p in self.pieces[1:])

    def value(self, x) -> np.ndarray:
        """Profile value; for radial probes the argument is the radius."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for i, piece in enumerate(self.pieces):
            if i == len(self.pieces) - 1:
                m = (x >= piece.lo) & (x <= piece.hi)
            else:
                m = (x >= piece.lo) & (x < piece.hi)
            if np.any(m):
                out[m] = piece.value(x[m])
        return out

    def derivative(self, x) -> np.ndarray:
        """One-sided piecewise derivative of the profile."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for i, piece in enumerate(self.pieces):
            if i == len(self.pieces) - 1:
                m = (x >= piece.lo) & (x <= piece.hi)
            else:
                m = (x >= piece.lo) & (x < piece.hi)
            if np.any(m):
                out[m] = piece.deriv(x[m])
        return out

    def to_spec(self) -> dict:
        """JSON-serialisable family tag + parameters (reproducible runs)."""
        if not self.family_spec:
            raise ValueError("probe does not carry a serialisable family spec")
        return json.loads(json.dumps(self.family_spec))

    def exact(self, key: str) -> float | None:
        return self.exact_table.get(key)


def _full_line(piece_defs: list[Piece]) -> tuple[Piece, ...]:
    return tuple(piece_defs)


# ---------------------------------------------------------------------------
# Gaussian-mode families
# ---------------------------------------------------------------------------

def make_constant_one(d: int = 1) -> ProbeFunction:
    """The constant probe v = 1 (the base optimizer)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    piece = Piece(-math.inf, math.inf, "expquad", (0.0, 0.0, 0.0))
    tail = TailBehavior("expquad", (0.0, 0.0, 0.0))
    table = {
        "l2_norm2": 1.0,
        "fisher": 0.0,
        "entropy": 0.0,
        "abs_entropy": 0.0,
        "first_moment": 0.0,
        "second_moment": float(d),
        "fourth_moment": float(d * (d + 2)),
        "deficit": 0.0,
    }
    return ProbeFunction(
        d=d, mode="gaussian", structure="coordinate", pieces=(piece,),
        tail_left=tail, tail_right=tail, symmetry="even",
        exact_table=table, family_spec={"family": "constant", "params": {"d": d}},
    )


def make_gaussian_optimizer(b, d: int | None = None) -> ProbeFunction:
    """Normalised exponential optimizer v_b(x) = exp(b.x - |b|^2).

    A vector b is reduced to its magnitude along one coordinate axis (the
    Gaussian measure is rotation invariant, so every functional of the probe
    only depends on |b|).
    """
    b_arr = np.atleast_1d(np.asarray(b, dtype=float))
    if d is None:
        d = b_arr.size
    if b_arr.size not in (1, d):
        raise ValueError("b must be scalar or a length-d vector")
    be = float(np.linalg.norm(b_arr))
    piece = Piece(-math.inf, math.inf, "expquad", (0.0, be, -be * be))
    tail = TailBehavior("expquad", (0.0, be, -be * be))
    table = {
        "l2_norm2": 1.0,
        "fisher": be * be,
        "entropy": 2.0 * be * be,
        "first_moment": 2.0 * be,
        "second_moment": float(d) + 4.0 * be * be,
        "deficit": 0.0,
    }
    return ProbeFunction(
        d=d, mode="gaussian", structure="coordinate", pieces=(piece,),
        tail_left=tail, tail_right=tail,
        symmetry="even" if be == 0.0 else "none",
        exact_table=table,
        family_spec={"family": "optimizer", "params": {"b": be, "d": d}},
    )


def make_gaussian_squeeze(s: float, d: int = 1) -> ProbeFunction:
    """Centered Gaussian reweighting v(x) = c exp(-s x1^2 / 2), |v|^2 dgamma = N(0, 1/(1+2s)).

    For s > 0 the probe concentrates the measure, giving second moment below
    d; requires s > -1/4 so that the L^2(gamma) norm is finite with margin.
    """
    if s <= -0.25:
        raise ValueError("s must exceed -1/4")
    c = (1.0 + 2.0 * s) ** 0.25
    sigma2 = 1.0 / (1.0 + 2.0 * s)
    piece = Piece(-math.inf, math.inf, "expquad", (-0.5 * s, 0.0, math.log(c)))
    tail = TailBehavior("expquad", (-0.5 * s, 0.0, math.log(c)))
    entropy = 0.5 * math.log(1.0 + 2.0 * s) - s * sigma2
    fisher = s * s * sigma2
    table = {
        "l2_norm2": 1.0,
        "fisher": fisher,
        "entropy": entropy,
        "first_moment": 0.0,
        "second_moment": sigma2 + (d - 1),
        "deficit": fisher - 0.5 * entropy,
    }
    return ProbeFunction(
        d=d, mode="gaussian", structure="coordinate", pieces=(piece,),
        tail_left=tail, tail_right=tail, symmetry="even",
        exact_table=table,
        family_spec={"family": "squeeze", "params": {"s": s, "d": d}},
    )


def make_hermite_probe(k: int, d: int = 1) -> ProbeFunction:
    """Normalised Hermite polynomial probe (k = 1: x; k = 2: (x^2-1)/sqrt(2)).

    Mean-zero in L^2(gamma), which is what the moment-vs-Fisher comparison
    requires of its inputs.
    """
    if k == 1:
        fn = lambda x: x
        dfn = lambda x: np.ones_like(x)
        zeros = (0.0,)
        table = {
            "l2_norm2": 1.0,
            "fisher": 1.0,
            "first_moment": 0.0,
            "second_moment": 3.0 + (d - 1),
            "entropy": float(sp.digamma(1.5)) + math.log(2.0),
        }
    elif k == 2:
        fn = lambda x: (x * x - 1.0) / math.sqrt(2.0)
        dfn = lambda x: x * math.sqrt(2.0)
        zeros = (-1.0, 1.0)
        table = {
            "l2_norm2": 1.0,
            "fisher": 2.0,
            "first_moment": 0.0,
            "second_moment": 5.0 + (d - 1),
        }
    else:
        raise ValueError("only k in {1, 2} is provided")
    piece = Piece(-math.inf, math.inf, "general", fn=fn, dfn=dfn)
    tail = TailBehavior("polynomial", poly_degree=k)
    return ProbeFunction(
        d=d, mode="gaussian", structure="coordinate", pieces=(piece,),
        tail_left=tail, tail_right=tail,
        symmetry="even" if k == 2 else "none",
        interior_zeros=zeros, nonnegative=False, exact_table=table,
        family_spec={"family": "hermite", "params": {"k": k, "d": d}},
    )


def make_tangent(eps: float, d: int = 1) -> ProbeFunction:
    """First-order perturbation of the constant: v = (1 + eps x1)/sqrt(1+eps^2)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    eps = float(eps)
    if eps == 0.0:
        return make_constant_one(d)
    c = math.sqrt(1.0 + eps * eps)
    fn = lambda x: (1.0 + eps * x) / c
    dfn = lambda x: np.full_like(x, eps / c)
    piece = Piece(-math.inf, math.inf, "general", fn=fn, dfn=dfn)
    tail = TailBehavior("polynomial", poly_degree=1)
    e2 = eps * eps
    table = {
        "l2_norm2": 1.0,
        "fisher": e2 / (1.0 + e2),
        "first_moment": 2.0 * eps / (1.0 + e2),
        "second_moment": (1.0 + 3.0 * e2) / (1.0 + e2) + (d - 1),
    }
    return ProbeFunction(
        d=d, mode="gaussian", structure="coordinate", pieces=(piece,),
        tail_left=tail, tail_right=tail,
        interior_zeros=(-1.0 / eps,), nonnegative=False, exact_table=table,
        family_spec={"family": "tangent", "params": {"eps": eps, "d": d}},
    )


# ---------------------------------------------------------------------------
# The plateau/exponential-tail instability family
# ---------------------------------------------------------------------------

def _prop42_closed_forms(a: float, n: int) -> dict[str, float]:
    """Exact functionals of the plateau probe via the normal CDF.

    With eps = a/(2 n^2), r0 = n/2 - 1/(2n), the unnormalised profile g is 1
    on [-r0, r0], the geometric cutoff exp(n log(eps) (|x|-r0)) on the strips,
    and sqrt(eps) exp(n|x|/2 - n^2/4) on the tails.  Every integral of
    g^2 * {1, x, x^2, log g^2} against gamma is a combination of
    integral x^k exp(q x + r) dgamma terms with known endpoints.
    """
    eps = a / (2.0 * n * n)
    log_eps = math.log(eps)
    r0 = 0.5 * n - 0.5 / n
    half = 0.5 * n
    alpha = n * log_eps                      # log-slope of the cutoff

    bulk0 = quad.gaussian_moment(0, 0.0, r0)
    bulk2 = quad.gaussian_moment(2, 0.0, r0)
    # strip: g^2 = exp(2 alpha x - 2 alpha r0)
    s_q, s_r = 2.0 * alpha, -2.0 * alpha * r0
    strip0 = quad.expaffine_gaussian_moment(0, s_q, s_r, r0, half)
    strip1 = quad.expaffine_gaussian_moment(1, s_q, s_r, r0, half)
    strip2 = quad.expaffine_gaussian_moment(2, s_q, s_r, r0, half)
    # tail: g^2 = eps exp(n x - n^2/2)
    t_q, t_r = float(n), log_eps - 0.5 * n * n
    tail0 = quad.expaffine_gaussian_moment(0, t_q, t_r, half, math.inf)
    tail1 = quad.expaffine_gaussian_moment(1, t_q, t_r, half, math.inf)
    tail2 = quad.expaffine_gaussian_moment(2, t_q, t_r, half, math.inf)

    gnorm2 = 2.0 * (bulk0 + strip0 + tail0)
    fisher_g = 2.0 * (alpha * alpha * strip0 + 0.25 * n * n * tail0)
    entropy_g = 2.0 * (2.0 * alpha * (strip1 - r0 * strip0)
                       + (log_eps - 0.5 * n * n) * tail0 + n * tail1)
    moment_g = 2.0 * (bulk2 + strip2 + tail2)

    fisher = fisher_g / gnorm2
    entropy = entropy_g / gnorm2 - math.log(gnorm2)
    return {
        "l2_norm2": 1.0,
        "gnorm2": gnorm2,
        "fisher": fisher,
        "entropy": entropy,
        "first_moment": 0.0,
        "second_moment": moment_g / gnorm2,
        "deficit": fisher - 0.5 * entropy,
        "tail_mass": tail0,          # one-sided, on the unnormalised profile
        "tail_exp_integral": tail0 / eps,   # = 1 - Phi(-n/2)
        "strip_mass": strip0,
        "eps": eps,
    }


def make_prop42(a: float, n: int) -> ProbeFunction:
    """Even, unit-norm plateau probe with matched exponential tails (d = 1).

    The cutoff on the two transition strips interpolates geometrically
    between 1 and sqrt(eps), which keeps it within [sqrt(eps), 1] and makes
    every functional of the probe expressible through the normal CDF; the
    exact values are stored in the probe table.
    """
    if a <= 0.0:
        raise ValueError("a must be positive")
    if n < 2:
        raise ValueError("n must be an integer >= 2")
    n = int(n)
    table = _prop42_closed_forms(a, n)
    eps = table["eps"]
    log_eps = math.log(eps)
    r0 = 0.5 * n - 0.5 / n
    half = 0.5 * n
    alpha = n * log_eps
    log_gnorm = 0.5 * math.log(table["gnorm2"])

    pieces = (
        # left tail: sqrt(eps) exp(-n x/2 - n^2/4)
        Piece(-math.inf, -half, "expquad",
              (0.0, -0.5 * n, 0.5 * log_eps - 0.25 * n * n - log_gnorm)),
        # left strip: psi(-x) = exp(alpha (-x - r0))
        Piece(-half, -r0, "expquad", (0.0, -alpha, -alpha * r0 - log_gnorm)),
        Piece(-r0, r0, "expquad", (0.0, 0.0, -log_gnorm)),
        Piece(r0, half, "expquad", (0.0, alpha, -alpha * r0 - log_gnorm)),
        Piece(half, math.inf, "expquad",
              (0.0, 0.5 * n, 0.5 * log_eps - 0.25 * n * n - log_gnorm)),
    )
    tail_r = TailBehavior("expquad", (0.0, 0.5 * n, 0.5 * log_eps - 0.25 * n * n - log_gnorm))
    tail_l = TailBehavior("expquad", (0.0, -0.5 * n, 0.5 * log_eps - 0.25 * n * n - log_gnorm))
    return ProbeFunction(
        d=1, mode="gaussian", structure="coordinate", pieces=pieces,
        tail_left=tail_l, tail_right=tail_r, symmetry="even",
        exact_table=table,
        family_spec={"family": "prop42", "params": {"a": a, "n": n}},
    )


# ---------------------------------------------------------------------------
# Euclidean-mode families
# ---------------------------------------------------------------------------

def _bump_value(y: np.ndarray) -> np.ndarray:
    t = y * (1.0 - y)
    out = np.zeros_like(y)
    m = t > 0.0
    out[m] = np.exp(-1.0 / t[m])
    return out


def _bump_deriv(y: np.ndarray) -> np.ndarray:
    t = y * (1.0 - y)
    out = np.zeros_like(y)
    m = t > 0.0
    tm = t[m]
    out[m] = np.exp(-1.0 / tm) * (2.0 * y[m] - 1.0) / (tm * tm)
    return out


_BUMP_NORM_CACHE: dict[None, float] = {}


def _bump_norm() -> float:
    """1/||f||_2 for the reference bump exp(-1/(y(1-y))) on (0, 1)."""
    if None not in _BUMP_NORM_CACHE:
        res = quad.integrate_segments(
            lambda y: _bump_value(y) ** 2, np.linspace(0.0, 1.0, 9),
            quad.QuadratureRule(tol=1e-15),
        )
        _BUMP_NORM_CACHE[None] = 1.0 / math.sqrt(res.value)
    return _BUMP_NORM_CACHE[None]


def default_bump() -> ProbeFunction:
    """Smooth reference bump supported in (0, 1), scaled to unit L^2(dx) norm."""
    scale = _bump_norm()
    fn = lambda x, s=scale: s * _bump_value(x)
    dfn = lambda x, s=scale: s * _bump_deriv(x)
    pieces = (
        Piece(-math.inf, 0.0, "zero"),
        Piece(0.0, 1.0, "general", fn=fn, dfn=dfn),
        Piece(1.0, math.inf, "zero"),
    )
    return ProbeFunction(
        d=1, mode="euclidean", structure="coordinate", pieces=pieces,
        tail_left=ZERO_TAIL, tail_right=ZERO_TAIL,
        exact_table={"l2_norm2": 1.0},
        family_spec={"family": "bump", "params": {}},
    )


def make_example1(n: int, base: ProbeFunction | None = None) -> ProbeFunction:
    """Comb of n shifted copies of a bump: u_n(x) = n^{-1/2} sum_k u(x + k).

    The base must be supported in (0, 1); the copies then occupy disjoint
    unit intervals, so the L^2 and H^1 data of u_n coincide with those of u
    while the entropy drops by ||u||_2^2 log n.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    if base is None:
        base = default_bump()
    if base.d != 1 or base.mode != "euclidean":
        raise ValueError("base bump must be a 1-D Euclidean probe")
    supp = [p for p in base.pieces if p.kind != "zero"]
    if not supp or supp[0].lo < 0.0 or supp[-1].hi > 1.0:
        raise ValueError("base bump must be supported in (0, 1)")
    if any(p.kind != "general" for p in supp):
        raise ValueError("base bump must be a smooth compactly supported probe")

    amp = 1.0 / math.sqrt(n)
    pieces = [Piece(-math.inf, float(-(n - 1)), "zero")]
    for k in range(n - 1, -1, -1):
        kk = float(k)
        fn = lambda x, k=kk, b=base, a=amp: a * b.value(x + k)
        dfn = lambda x, k=kk, b=base, a=amp: a * b.derivative(x + k)
        pieces.append(Piece(-kk, 1.0 - kk, "general", fn=fn, dfn=dfn))
    pieces.append(Piece(1.0, math.inf, "zero"))
    spec_base = base.family_spec.get("family", "custom") if base.family_spec else "custom"
    return ProbeFunction(
        d=1, mode="euclidean", structure="coordinate", pieces=tuple(pieces),
        tail_left=ZERO_TAIL, tail_right=ZERO_TAIL,
        family_spec={"family": "example1", "params": {"n": n, "base": spec_base}},
    )


def make_example2(a_exp: float, d: int = 1) -> ProbeFunction:
    """Radial probe (1+|x|^2)^{-d/4} (log(2+|x|^2))^{-a/2} with a in (1, 2).

    Lies in H^1(dx), but the entropy integrand decays like
    -|x|^{-d} (log|x|)^{1-a}, whose integral diverges to -infinity.
    """
    if not (1.0 < a_exp < 2.0):
        raise ValueError("a_exp must lie in (1, 2)")
    if d < 1:
        raise ValueError("d must be >= 1")

    def fn(r, d=d, a=a_exp):
        r2 = r * r
        return (1.0 + r2) ** (-0.25 * d) * np.log(2.0 + r2) ** (-0.5 * a)

    def dfn(r, d=d, a=a_exp):
        r2 = r * r
        base = fn(r)
        return base * (-0.5 * d * r / (1.0 + r2) - a * r / ((2.0 + r2) * np.log(2.0 + r2)))

    tail = TailBehavior("algebraic", power=-0.5 * d, log_power=-0.5 * a_exp)
    if d == 1:
        pieces = (Piece(-math.inf, math.inf, "general",
                        fn=lambda x: fn(np.abs(x)),
                        dfn=lambda x: np.sign(x) * dfn(np.abs(x))),)
        structure = "coordinate"
    else:
        pieces = (Piece(0.0, math.inf, "general", fn=fn, dfn=dfn),)
        structure = "radial"
    return ProbeFunction(
        d=d, mode="euclidean", structure=structure, pieces=pieces,
        tail_left=tail, tail_right=tail, symmetry="even",
        family_spec={"family": "example2", "params": {"a_exp": a_exp, "d": d}},
    )


def make_sqrt_gamma(d: int = 1, lam: float = 1.0) -> ProbeFunction:
    """Euclidean Gaussian profile u(x) = lam^{d/4}(2 pi)^{-d/4} exp(-lam |x|^2/4).

    At lam = 1 this is sqrt(gamma); general lam gives the L^2-preserving
    dilation family.  Unit L^2(dx) norm for every lam > 0.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if d != 1:
        raise ValueError("Euclidean Gaussian probes are provided in d = 1")
    r = 0.25 * (math.log(lam) - LOG_2PI)
    piece = Piece(-math.inf, math.inf, "expquad", (-0.25 * lam, 0.0, r))
    tail = TailBehavior("expquad", (-0.25 * lam, 0.0, r))
    table = {
        "l2_norm2": 1.0,
        "fisher": lam * d / 4.0,
        "second_moment": d / lam,
        "first_moment": 0.0,
        "entropy": 0.5 * d * (math.log(lam) - LOG_2PI) - 0.5 * d,
    }
    return ProbeFunction(
        d=d, mode="euclidean", structure="coordinate", pieces=(piece,),
        tail_left=tail, tail_right=tail, symmetry="even",
        exact_table=table,
        family_spec={"family": "sqrtgamma", "params": {"d": d, "lam": lam}},
    )


# ---------------------------------------------------------------------------
# Probe algebra: dilation and the Gaussian <-> Euclidean change of variables
# ---------------------------------------------------------------------------

def scale_probe(u: ProbeFunction, s: float) -> ProbeFunction:
    """L^2(dx)-preserving dilation u_s(x) = s^{d/2} u(s x) of a Euclidean probe."""
    if u.mode != "euclidean":
        raise ValueError("dilation is only meaningful for Euclidean-mode probes")
    if s <= 0.0:
        raise ValueError("scale must be positive")
    amp = s ** (0.5 * u.d)
    log_amp = 0.5 * u.d * math.log(s)

    def conv(piece: Piece) -> Piece:
        lo, hi = piece.lo / s, piece.hi / s
        if piece.kind == "zero":
            return Piece(lo, hi, "zero")
        if piece.kind == "expquad":
            p, q, r = piece.coeffs
            return Piece(lo, hi, "expquad", (p * s * s, q * s, r + log_amp), piece.sign)
        fn = lambda x, f=piece.fn: amp * f(s * x)
        dfn = lambda x, f=piece.dfn: amp * s * f(s * x)
        return Piece(lo, hi, "general", fn=fn, dfn=dfn)

    def conv_tail(tail: TailBehavior) -> TailBehavior:
        if tail.kind in ("zero",):
            return tail
        p, q, r = tail.coeffs
        return TailBehavior(tail.kind, (p * s * s, q * s, r + log_amp),
                            tail.poly_degree, tail.power, tail.log_power)

    spec = {"family": "scaled", "params": {"s": s, "inner": dict(u.family_spec)}}
    return ProbeFunction(
        d=u.d, mode="euclidean", structure=u.structure,
        pieces=tuple(conv(p) for p in u.pieces),
        tail_left=conv_tail(u.tail_left), tail_right=conv_tail(u.tail_right),
        symmetry=u.symmetry,
        interior_zeros=tuple(z / s for z in u.interior_zeros),
        nonnegative=u.nonnegative, family_spec=spec,
    )


def gauss_to_euclid(v: ProbeFunction) -> ProbeFunction:
    """Change of variables u = v sqrt(gamma) from Gaussian to Euclidean mode."""
    if v.mode != "gaussian":
        raise ValueError("probe is not in Gaussian mode")
    if v.structure == "coordinate" and v.d != 1:
        raise ValueError("the change of variables is provided for d = 1 or radial probes")
    dd = v.d if v.structure == "radial" else 1
    log_norm = -0.25 * dd * LOG_2PI

    def conv(piece: Piece) -> Piece:
        if piece.kind == "zero":
            return piece
        if piece.kind == "expquad":
            p, q, r = piece.coeffs
            return Piece(piece.lo, piece.hi, "expquad",
                         (p - 0.25, q, r + log_norm), piece.sign)
        fn = lambda x, f=piece.fn: f(x) * np.exp(-0.25 * x * x + log_norm)
        dfn = lambda x, f=piece.fn, g=piece.dfn: (
            (g(x) - 0.5 * x * f(x)) * np.exp(-0.25 * x * x + log_norm))
        return Piece(piece.lo, piece.hi, "general", fn=fn, dfn=dfn)

    def conv_tail(tail: TailBehavior) -> TailBehavior:
        if tail.kind == "zero":
            return tail
        p, q, r = tail.coeffs
        return TailBehavior("expquad", (p - 0.25, q, r + log_norm),
                            tail.poly_degree)

    spec = {"family": "gauss_to_euclid", "params": {"inner": dict(v.family_spec)}}
    return ProbeFunction(
        d=v.d, mode="euclidean", structure=v.structure,
        pieces=tuple(conv(p) for p in v.pieces),
        tail_left=conv_tail(v.tail_left), tail_right=conv_tail(v.tail_right),
        symmetry=v.symmetry, interior_zeros=v.interior_zeros,
        nonnegative=v.nonnegative, family_spec=spec,
    )


def euclid_to_gauss(u: ProbeFunction, lam: float = 1.0) -> ProbeFunction:
    """Inverse change of variables v(x) = lam^{-d/4} u(x/sqrt(lam)) / sqrt(gamma(x)).

    Supported for exponential-quadratic pieces and compactly supported
    general pieces (the division by sqrt(gamma) would overflow on unbounded
    general pieces).
    """
    if u.mode != "euclidean":
        raise ValueError("probe is not in Euclidean mode")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if u.structure == "coordinate" and u.d != 1:
        raise ValueError("the change of variables is provided for d = 1 or radial probes")
    dd = u.d if u.structure == "radial" else 1
    rs = math.sqrt(lam)
    log_norm = 0.25 * dd * LOG_2PI - 0.25 * u.d * math.log(lam)

    def conv(piece: Piece) -> Piece:
        lo, hi = piece.lo * rs, piece.hi * rs
        if piece.kind == "zero":
            return Piece(lo, hi, "zero")
        if piece.kind == "expquad":
            p, q, r = piece.coeffs
            return Piece(lo, hi, "expquad",
                         (p / lam + 0.25, q / rs, r + log_norm), piece.sign)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("general pieces must be compactly supported for this transform")
        fn = lambda x, f=piece.fn: f(x / rs) * np.exp(0.25 * x * x + log_norm)
        dfn = lambda x, f=piece.fn, g=piece.dfn: (
            (g(x / rs) / rs + 0.5 * x * f(x / rs)) * np.exp(0.25 * x * x + log_norm))
        return Piece(lo, hi, "general", fn=fn, dfn=dfn)

    def conv_tail(tail: TailBehavior) -> TailBehavior:
        if tail.kind == "zero":
            return TailBehavior("expquad", (0.25, 0.0, -700.0))
        p, q, r = tail.coeffs
        return TailBehavior("expquad", (p / lam + 0.25, q / rs, r + log_norm),
                            tail.poly_degree)

    spec = {"family": "euclid_to_gauss", "params": {"lam": lam, "inner": dict(u.family_spec)}}
    return ProbeFunction(
        d=u.d, mode="gaussian", structure=u.structure,
        pieces=tuple(conv(p) for p in u.pieces),
        tail_left=conv_tail(u.tail_left), tail_right=conv_tail(u.tail_right),
        symmetry=u.symmetry,
        interior_zeros=tuple(z * rs for z in u.interior_zeros),
        nonnegative=u.nonnegative, family_spec=spec,
    )


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

_FAMILIES: dict[str, Callable[..., ProbeFunction]] = {}


def _register():
    _FAMILIES.update({
        "constant": lambda params: make_constant_one(int(params.get("d", 1))),
        "optimizer": lambda params: make_gaussian_optimizer(
            params.get("b", 0.0), int(params.get("d", 1))),
        "squeeze": lambda params: make_gaussian_squeeze(
            float(params.get("s", 0.5)), int(params.get("d", 1))),
        "hermite": lambda params: make_hermite_probe(
            int(params.get("k", 1)), int(params.get("d", 1))),
        "tangent": lambda params: make_tangent(
            float(params.get("eps", 0.1)), int(params.get("d", 1))),
        "bump": lambda params: default_bump(),
        "example1": lambda params: make_example1(int(params.get("n", 1))),
        "example2": lambda params: make_example2(
            float(params.get("a_exp", 1.5)), int(params.get("d", 1))),
        "prop42": lambda params: make_prop42(
            float(params.get("a", 1.0)), int(params.get("n", 10))),
        "sqrtgamma": lambda params: make_sqrt_gamma(
            int(params.get("d", 1)), float(params.get("lam", 1.0))),
    })


_register()


def probe_from_spec(spec: Mapping) -> ProbeFunction:
    """Rebuild a probe from its JSON family spec."""
    family = spec.get("family")
    if family not in _FAMILIES:
        raise ValueError(f"unknown probe family {family!r}")
    params = spec.get("params", {})
    return _FAMILIES[family](params)


def known_families() -> tuple[str, ...]:
    return tuple(sorted(_FAMILIES))
