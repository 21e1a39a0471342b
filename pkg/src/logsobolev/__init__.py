"""Numerical toolkit for logarithmic Sobolev functionals, stability bounds,
flow identities, and instability witnesses."""

from .quad import (
    QuadratureRule,
    IntegralResult,
    DEFAULT_RULE,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    gauss_hermite_rule,
    integrate_gaussian,
    integrate_lebesgue,
)
from .probes import (
    ProbeFunction,
    Piece,
    TailBehavior,
    make_constant_one,
    make_gaussian_optimizer,
    make_gaussian_squeeze,
    make_hermite_probe,
    make_tangent,
    make_example1,
    make_example2,
    make_prop42,
    make_sqrt_gamma,
    default_bump,
    scale_probe,
    gauss_to_euclid,
    euclid_to_gauss,
    probe_from_spec,
    known_families,
)
from .functionals import (
    FunctionalReport,
    report,
    probe_integral,
    ckp_lower_bound,
    w2_distance_1d,
    rescale_to_zero_entropy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
