"""Score fusion, meta-features, stacking ensembles and greedy base selection."""
from .fusion import average_fuse, vote_fuse
from .features import Passthrough, ScoreCache, build_meta_features
from .stacking import (BUILDERS, MGE_DEFAULT_BASES, UGE_DEFAULT_BASES, MGEAD, UGEAD, AverageEnsemble,
                       StackModel, mge_apply, mge_fit, uge_apply, uge_fit)
from .greedy import GreedyResult, greedy_search

__all__ = [
    "vote_fuse", "average_fuse", "Passthrough", "ScoreCache", "build_meta_features",
    "StackModel", "uge_fit", "uge_apply", "mge_fit", "mge_apply", "UGEAD", "MGEAD",
    "AverageEnsemble", "BUILDERS", "UGE_DEFAULT_BASES", "MGE_DEFAULT_BASES",
    "GreedyResult", "greedy_search",
]
