"""Symbolic checks for Riemannian Q-manifolds on coordinate charts."""
from __future__ import annotations

from .berezin import (BerezinVolume, CertificateError, DivergenceReport, UnimodularCertificate, canonical_volume,
                      certify_unimodular, divergence, local_representative, modular_representative,
                      pullback_volume, trace_divergence_residual)
from .charts import Chart, CoordinateChange, transform_metric, transform_vector
from .dsl import DSLError, Document, parse, print_document
from .geometry import (InverseMetric, MetricTensor, SymTensor2, VectorField, Verdict, check_killing_shander,
                       check_rq_morphism, inverse_metric, inverse_metric_symmetry, is_homological, is_killing,
                       lie_bracket, lie_derivative_metric, metric_trace, pairing)
from .liealg import LieAlgebraData, check_algebraic_killing, check_jacobi, check_unimodular_trace, search
from .numeric import NumericChart, NumericSuperValue, numeric_eval
from .runner import Report, run_checks
from .scalar import ScalarExpr
from .superalgebra import Parity, SuperFunction, invert, sampling, sqrt_even
from .supermatrix import SuperMatrix, berezinian, supertrace, supertranspose

__version__ = "0.1.0"

__all__ = [
    "BerezinVolume", "CertificateError", "DivergenceReport", "UnimodularCertificate", "canonical_volume",
    "certify_unimodular", "divergence", "local_representative", "modular_representative", "pullback_volume",
    "trace_divergence_residual", "Chart", "CoordinateChange", "transform_metric", "transform_vector",
    "DSLError", "Document", "parse", "print_document", "InverseMetric", "MetricTensor", "SymTensor2",
    "VectorField", "Verdict", "check_killing_shander", "check_rq_morphism", "inverse_metric",
    "inverse_metric_symmetry", "is_homological", "is_killing", "lie_bracket", "lie_derivative_metric",
    "metric_trace", "pairing", "LieAlgebraData", "check_algebraic_killing", "check_jacobi",
    "check_unimodular_trace", "search", "NumericChart", "NumericSuperValue", "numeric_eval", "Report",
    "run_checks", "ScalarExpr", "Parity", "SuperFunction", "invert", "sampling", "sqrt_even", "SuperMatrix",
    "berezinian", "supertrace", "supertranspose",
]
