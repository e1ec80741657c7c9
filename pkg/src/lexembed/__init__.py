"""Order embeddings of semilinear linear orders into lexicographic powers of Q."""

from .cells import decompose, dimension, good_projection, has_good_projection, is_partition
from .embed1d import classify_monotone, embed_1d, normalize_1d
from .embednd import embed, embed_via_quotient, quotient_by_E
from .field import bounded_injection, compress_finite_coordinate, field_compress
from .harness import finite_oracle_check, load_instance, run_instance, sample_points, verify_embedding
from .order import DefOrder, check_linear_order, compute_E, compute_H
from .qe import is_satisfiable, qe, simplify
from .terms import evaluate, parse_formula, to_sexpr

__all__ = [
    "DefOrder",
    "bounded_injection",
    "check_linear_order",
    "classify_monotone",
    "compress_finite_coordinate",
    "compute_E",
    "compute_H",
    "decompose",
    "dimension",
    "embed",
    "embed_1d",
    "embed_via_quotient",
    "evaluate",
    "field_compress",
    "finite_oracle_check",
    "good_projection",
    "has_good_projection",
    "is_partition",
    "is_satisfiable",
    "load_instance",
    "normalize_1d",
    "parse_formula",
    "qe",
    "quotient_by_E",
    "run_instance",
    "sample_points",
    "simplify",
    "to_sexpr",
    "verify_embedding",
]
