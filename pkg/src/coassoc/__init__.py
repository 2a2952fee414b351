"""Coassociative submanifolds of the Bryant-Salamon G2 manifold of ASD 2-forms over S^4.

Submodules: ``forms`` (exterior algebra), ``charts`` (atlas and frames),
``g2`` (the torsion-free structure), ``groups`` (symmetry actions),
``cohomogeneity`` (reduced ODEs and sweeps), ``solutions`` (first integrals),
``level_sets`` (curve tracing and topology) and ``cli``.
"""

from .charts import ChartId, Tangent, TotalPoint, make_point
from .cohomogeneity import PathState, integrate, ode_rhs, sweep_and_verify, sweep_report
from .errors import (
    ChartDomainError,
    CoassocError,
    ConfigError,
    DegenerateFormError,
    DegenerateSpanError,
    DomainError,
    NoRootError,
    NotInSubgroupError,
    SingularLocusError,
    SliceError,
)
from .g2 import G2Params, coassoc_residual, phi_lambda, star_phi_lambda, torsion_residual
from .groups import Case, act_total, data_tables, fundamental_field, orbit_info
from .level_sets import component_report, trace_level
from .solutions import F_eval, G_eval, alpha_C, beta_C, roots_alpha_beta

__version__ = "0.1.0"

__all__ = [
    "ChartId",
    "Tangent",
    "TotalPoint",
    "make_point",
    "PathState",
    "integrate",
    "ode_rhs",
    "sweep_and_verify",
    "sweep_report",
    "CoassocError",
    "ChartDomainError",
    "ConfigError",
    "DegenerateFormError",
    "DegenerateSpanError",
    "DomainError",
    "NoRootError",
    "NotInSubgroupError",
    "SingularLocusError",
    "SliceError",
    "G2Params",
    "coassoc_residual",
    "phi_lambda",
    "star_phi_lambda",
    "torsion_residual",
    "Case",
    "act_total",
    "data_tables",
    "fundamental_field",
    "orbit_info",
    "component_report",
    "trace_level",
    "F_eval",
    "G_eval",
    "alpha_C",
    "beta_C",
    "roots_alpha_beta",
]
