"""cubeforms: exact exterior calculus on rational boxes with certified
sup-norm inequalities, and a numerical pipeline for flat (bounded,
possibly discontinuous) forms.

Layers, bottom up:

* :mod:`cubeforms.forms`     exact polynomial forms: wedge, d, pullback,
                             splitting and fiber integration along an axis
* :mod:`cubeforms.supnorm`   two-sided sup seminorm bounds (Bernstein upper,
                             witnessed sample lower)
* :mod:`cubeforms.poincare`  closed approximation and bounded primitives
                             with exact-rational certificates
* :mod:`cubeforms.gridforms` grid-sampled forms, mollification, polynomial
                             fitting, the staged iterative primitive
* :mod:`cubeforms.simplices` simplex integration and the flatness auditor
* :mod:`cubeforms.serialize` JSON wire formats
* :mod:`cubeforms.cli`       the ``cubeforms`` command
"""

from .forms import Cube, DimensionMismatch, FormsError, Polynomial, PolyForm, pullback
from .gridforms import (
    GridForm,
    Mollifier,
    ResidualHistory,
    StagnationError,
    current_pairing,
    default_schedule,
    fit_polynomial,
    iterative_primitive,
    locally_constant_check,
    mollify,
    sample,
    compact_test_forms,
    weak_closedness_residual,
)
from .poincare import (
    NormCertificate,
    NotClosedError,
    RecursionTrace,
    bounded_primitive,
    choose_tau,
    closed_approx,
    constant,
    standard_primitive,
    verify_certificate,
)
from .simplices import (
    FlatnessReport,
    Simplex,
    boundary,
    flatness_check,
    integrate_over_boundary,
    integrate_over_simplex,
)
from .supnorm import NormBound, bernstein_degree_elevate, flat_seminorm, sup_norm

__version__ = "0.1.0"

__all__ = [
    "Cube", "DimensionMismatch", "FormsError", "Polynomial", "PolyForm", "pullback",
    "GridForm", "Mollifier", "ResidualHistory", "StagnationError",
    "current_pairing", "default_schedule", "fit_polynomial",
    "iterative_primitive", "locally_constant_check", "mollify", "sample",
    "compact_test_forms", "weak_closedness_residual",
    "NormCertificate", "NotClosedError", "RecursionTrace",
    "bounded_primitive", "choose_tau", "closed_approx", "constant",
    "standard_primitive", "verify_certificate",
    "FlatnessReport", "Simplex", "boundary", "flatness_check",
    "integrate_over_boundary", "integrate_over_simplex",
    "NormBound", "bernstein_degree_elevate", "flat_seminorm", "sup_norm",
    "__version__",
]
