"""monosep: monotone-and-separating multiset embeddings.

A multiset-to-vector map F is monotone and separating (MAS) when
S contained in T  <=>  F(S) <= F(T) elementwise, so a coordinatewise
comparison of embeddings decides containment.  This package provides the
exact constructions and impossibility refuters for finite ground sets, the
weakly-MAS parametric families with hat activations for continuous ground
sets, the asymmetric containment distance, Monte Carlo labs validating the
separation-probability and stability bounds, a small trainable containment
model, and a dominance-based retrieval index.
"""

from .multiset import (
    GroundSpec,
    Multiset,
    RealMultiset,
    enumerate_multisets,
    is_subset,
    is_subset_real,
)
from .distance import CostMatrix, Coupling, assignment_solve, d_as, padded_wasserstein
from .activations import (
    ActivationKind,
    HatSpec,
    hat_eval,
    hat_grad,
    is_hat,
    relu,
    tri_eval,
    tri_relu_identity_check,
)
from .exact import (
    DimensionBounds,
    EmbeddingMatrix,
    MasVerdict,
    RandomProjectionError,
    degenerate_k1_embedding,
    dimension_bounds,
    extreme_pairs,
    monotone_extension_demo,
    onehot_mas,
    random_projection_mas,
    refute_maximal_singleton,
    refute_monotone_chain,
    verify_mas,
)
from .weak import (
    ReluMasParams,
    WeakMasParams,
    attention_nonmonotone_demo,
    eval_relu_mas,
    eval_weak_mas,
    find_separator,
    midpoint_witness,
    sample_params,
    sum_pooled_attention,
    tri_network_params,
)

__version__ = "0.1.0"
