"""Iterative subspace learners for multi-index models under Gaussian inputs."""

from .directions import (
    CandidateSet,
    DirectionFinderConfig,
    mim_direction_candidates,
    mlc_direction_candidates,
    orthonormal_extend,
)
from .estimator import MultiIndexClassifier
from .hermite import (
    HermiteCoefficients,
    center_and_normalize,
    gradient_outer_product,
    hermite_eval,
    hermite_regression,
    poly_eval,
)
from .learner import (
    ArrayBatcher,
    BatchSampler,
    LearnerConfig,
    TrainTrace,
    learn,
    opt_of_rcn,
    potential,
    zero_one_error,
)
from .models import (
    ConfusionMatrix,
    IntersectionOfHalfspaces,
    LabeledDataset,
    MulticlassLinearClassifier,
    NoiseSpec,
    apply_adversarial,
    intersection_predict,
    mlc_predict,
    sample_dataset,
    symmetric_confusion,
)
from .partition import (
    OUTSIDE,
    ApproximatingPartition,
    PiecewiseConstantClassifier,
    SubspaceBasis,
    build_partition,
    classify,
    fit_piecewise_constant,
    locate,
    refine_alignment_check,
    refine_partition,
)
from .sq import (
    PlantedTwoIndexConcept,
    RootOfUnityVector,
    build_appendix_f_instance,
    build_contrastive_confusion_matrix,
    build_rcn_confusion_matrix,
    circulant_eigenvalues,
    hard_instance_2d,
    near_orthogonal_family,
    verify_moment_matching,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
