"""Tree GP engine for symbolic regression with semantic simplification.

Evolves expression trees without size limits, and per generation extracts
each genotype's exact and approximate phenotypes by replacing subtrees with
semantically equivalent smaller ones, recording size / fitness / diversity /
deviation / structure metrics for every variant.
"""

__version__ = "0.1.0"

from .data import (  # noqa: E402,F401
    Dataset,
    SplitDataset,
    load_csv,
    monte_carlo_split,
    resolve_dataset,
    standardize,
    synthetic_dataset,
)
from .evolution import (  # noqa: F401
    GPConfig,
    Individual,
    evolve_generation,
    initialize_population,
    ramped_half_and_half,
    rmse_fitness,
    subtree_mutation,
    swap_crossover,
    tournament_select,
)
from .kernels import BACKEND  # noqa: F401
from .phenotype import (  # noqa: F401
    ApproximationLevel,
    SimilarityMatrix,
    SimplificationReport,
    build_matrix,
    equivalent_pairs,
    extract_population_phenotypes,
    percentile_threshold,
    similarity,
    simplify,
)
from .semantics import SemanticsTable, evaluate_with_cache  # noqa: F401
from .trees import (  # noqa: F401
    ProgramElement,
    Tree,
    canonical_serialize,
    parse,
    replace_span,
    subtree_span,
)
