"""Influence diagrams solved on a rooted cluster tree, with value-of-information queries."""

from .errors import IDVoiError
from .io import export_dot, format_diagram, parse, parse_file, serialize_result
from .model import InfluenceDiagram, Variable, validate_diagram
from .oracle import oracle_modified_value, oracle_value
from .propagate import PropagationContext, SolveResult, compile_diagram, insert_evidence, solve, sweep
from .relevance import bayes_ball, requisite_observations
from .treebuild import check_proper, construct_tree
from .voi import (
    VoiQuery,
    VoiResult,
    advance_observation,
    delay_observation,
    legality,
    posterior_evidence,
    voi_report,
)

__all__ = [
    "IDVoiError",
    "InfluenceDiagram",
    "PropagationContext",
    "SolveResult",
    "Variable",
    "VoiQuery",
    "VoiResult",
    "advance_observation",
    "bayes_ball",
    "check_proper",
    "compile_diagram",
    "construct_tree",
    "delay_observation",
    "export_dot",
    "format_diagram",
    "insert_evidence",
    "legality",
    "oracle_modified_value",
    "oracle_value",
    "parse",
    "parse_file",
    "posterior_evidence",
    "requisite_observations",
    "serialize_result",
    "solve",
    "sweep",
    "validate_diagram",
    "voi_report",
]
