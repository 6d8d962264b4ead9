"""One-row dispersing Lorentz gas on the torus: exact flow, crossing words,
admissible orbit construction, rotation-set sampling, and entropy estimates."""

from .geometry import BilliardTable, LiftedDisk, lifted_center
from .flow import PhasePoint, TrajectorySegment, liouville_sample, simulate
from .words import Letter, reduce_letters, text_to_word, word_to_text

__version__ = "0.1.0"

__all__ = [
    "BilliardTable",
    "LiftedDisk",
    "Letter",
    "PhasePoint",
    "TrajectorySegment",
    "lifted_center",
    "liouville_sample",
    "reduce_letters",
    "simulate",
    "text_to_word",
    "word_to_text",
    "__version__",
]
