"""Schur-complement elimination for symmetric indefinite block operators and
discretized radial Dirac-Coulomb channels."""

from ._core import (  # noqa: F401
    BlockOperator,
    SchurDiracError,
    apply,
    assemble,
    assemble_sparse,
    build_channel,
    build_grid,
    c2_consistency,
    channel_spectrum,
    embedding_delta,
    find_c2,
    from_text,
    gap_eigenvalues,
    hardy_sweep,
    inertia_c2_oracle,
    positivity_margin,
    resolvent_difference_check,
    schur_form_matrix,
    shifted_operator,
    solve,
    sommerfeld_energy,
    symmetry_identity_check,
    to_text,
)

__version__ = "1.0.0"
