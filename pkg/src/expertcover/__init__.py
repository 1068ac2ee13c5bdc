"""Design, decode and verify configurations of local expert classifiers."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoundUndefinedError,
    ConfigurationError,
    CoverageError,
    EnsembleFormatError,
    ExpertCoverError,
    ParameterError,
    SizeLimitError,
)
from .model import (  # noqa: E402
    ClassificationMatrix,
    Ensemble,
    ExpertScope,
    OutputSet,
    confusion_witness,
    from_matrix,
    is_fully_distinguishing,
    output_sets_disjoint,
    to_matrix,
    uncovered_pairs,
)
