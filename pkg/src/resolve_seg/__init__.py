"""Pick the pyramid level at which to segment an image, trading accuracy for time."""

from .config import ExperimentConfig, load_config
from .corpus import Corpus, CorpusEntry, generate_synthetic_corpus
from .imaging import Pyramid, build_pyramid
from .segment import ChanVese, RegionGrow, segment_at_level
from .tradeoff import label_best_resolution, omega

__version__ = "0.1.0"

__all__ = [
    "ChanVese",
    "Corpus",
    "CorpusEntry",
    "ExperimentConfig",
    "Pyramid",
    "RegionGrow",
    "build_pyramid",
    "generate_synthetic_corpus",
    "label_best_resolution",
    "load_config",
    "omega",
    "segment_at_level",
]
