"""Construction of gadget pairs with equal fields and different magnetization gaps."""
from .bounding import BoundingStep, bounding_pair, bounding_sequence
from .family import (BuildResult, CaseOne, ContractionData, DenseFamily, Interval,
                     admissible_choices, build_gadget, canonical_choice,
                     contraction_data, dense_family, density_violations,
                     detect_case1, family_images, inner_gadget, sequence_images,
                     verify_density)
from .pairs import (PairResult, PairSearchFailed, bootstrap_pairs,
                    find_crossing_lambda, find_pair)

__all__ = [
    "BoundingStep", "BuildResult", "CaseOne", "ContractionData", "DenseFamily",
    "Interval", "PairResult", "PairSearchFailed", "admissible_choices",
    "bootstrap_pairs", "bounding_pair", "bounding_sequence", "build_gadget",
    "canonical_choice", "contraction_data", "dense_family", "density_violations",
    "detect_case1", "family_images", "find_crossing_lambda", "find_pair",
    "inner_gadget", "sequence_images", "verify_density",
]
