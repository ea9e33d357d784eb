"""Python bindings for the encmap C++ core."""

from ._encmap import (
    DEFAULT_EPSILON,
    DEFAULT_RANK_TOLERANCE,
    DensitySpectrum,
    Dendrogram,
    DistanceMatrix,
    EmbeddingMatrix,
    EncmapError,
    FeatureVector,
    MapLayout,
    base_matrix,
    closed_form_qre_total,
    compute_spectrum,
    feature_vector,
    hierarchical_cluster,
    l2_normalize_rows,
    nearest_neighbors,
    pairwise_distances,
    perturb,
    qre,
    read_embedding_matrix,
    read_feature_vector,
    read_spectrum,
    run_cli,
    tsne,
    unit_base_spectrum,
    von_neumann_entropy,
    write_embedding_matrix,
    write_feature_vector,
    write_spectrum,
)

__all__ = [name for name in dir() if not name.startswith("_")]
