"""Rank-one operator fields over discretized surfaces.

Per-fibre tools for elementary operators on matrix algebras (length, norms,
factor recovery), line-bundle extraction and integer-class obstructions over
simplicial bases, closure approximation by two-sided multiplications, and a
mapping-telescope laboratory where the obstruction hides at every finite
stage.

Submodules import lazily; ``import linefield`` is cheap until something
numerical is touched.
"""

from importlib import import_module

__version__ = "0.1.0"

_SUBMODULES = (
    "bundles",
    "cli",
    "closure",
    "errors",
    "fibre",
    "fields",
    "meshes",
    "reports",
    "serialize",
    "service",
    "telescope",
    "topology",
)

_EXPORTS = {
    # errors
    "LinefieldError": "errors",
    "InputError": "errors",
    "PreconditionError": "errors",
    "ObstructionFound": "errors",
    "NontrivialClass": "errors",
    "ObstructedOnCompact": "errors",
    # fibre
    "ElementaryRep": "fibre",
    "FibreOperator": "fibre",
    "to_fibre_matrix": "fibre",
    "apply_rep": "fibre",
    "apply_fibre": "fibre",
    "reshuffle": "fibre",
    "choi_matrix": "fibre",
    "is_completely_positive": "fibre",
    "length": "fibre",
    "rep_length": "fibre",
    "minimal_rep": "fibre",
    "rank_one_factor": "fibre",
    "fibre_norm": "fibre",
    "amplification_norm": "fibre",
    "haagerup_norm": "fibre",
    "HaagerupEstimate": "fibre",
    "pair_distance": "fibre",
    "recover_pair": "fibre",
    "RecoveryCertificate": "fibre",
    "stabilize_sequence": "fibre",
    "classify_special": "fibre",
    # topology
    "Complex2": "topology",
    "cohomology": "topology",
    "CohomologyReport": "topology",
    "cocycle_class": "topology",
    "is_coboundary": "topology",
    # meshes
    "sphere_mesh": "meshes",
    "torus_grid": "meshes",
    "klein_grid": "meshes",
    "disc_mesh": "meshes",
    # fields
    "OperatorField": "fields",
    "field_from_matrices": "fields",
    "field_from_pairs": "fields",
    "validate": "fields",
    "FieldReport": "fields",
    "norm_profile": "fields",
    "matrix_unit_decomposition": "fields",
    "matrix_unit_pairs": "fields",
    "reassemble_matrix_units": "fields",
    "restrict": "fields",
    # bundles
    "LineSection": "bundles",
    "extract": "bundles",
    "winding_cocycle": "bundles",
    "chern_class": "bundles",
    "ChernReport": "bundles",
    "trivialize": "bundles",
    "factor_field": "bundles",
    "synthesize_operator": "bundles",
    "monopole_field": "bundles",
    "field_from_sections": "bundles",
    "section_from_states": "bundles",
    "coherent_states": "bundles",
    # closure
    "sublevel_exhaustion": "closure",
    "approximate_by_multiplications": "closure",
    "reconstruct_global": "closure",
    "closure_verdict": "closure",
    "ClosureVerdict": "closure",
    # telescope
    "build_truncation": "telescope",
    "canonical_tail": "telescope",
    "canonical_gluing": "telescope",
    "GluingData": "telescope",
    "section_from_gluing": "telescope",
    "field_from_gluing": "telescope",
    "extract_gluing": "telescope",
    "truncation_trivialization": "telescope",
    "residue_window": "telescope",
    "is_globally_trivial": "telescope",
    "survivors_at_depth": "telescope",
    "phantom_demo": "telescope",
}

__all__ = ["__version__", *sorted(_SUBMODULES), *sorted(_EXPORTS)]


def __getattr__(name):
    if name in _SUBMODULES:
        return import_module(f".{name}", __name__)
    mod = _EXPORTS.get(name)
    if mod is not None:
        return getattr(import_module(f".{mod}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(__all__))
