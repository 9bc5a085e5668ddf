"""Semi-automatic evaluation toolkit for pronoun translation in MT.

Implements two reference-based pronoun metrics (APT, a weighted six-case
accuracy, and AutoPRF, precision/recall/F over clipped alignment counts),
meta-evaluation of metric scores against human judgments, and a triage
workflow that auto-accepts high-precision metric decisions and routes the
rest to human annotators through a small review service.
"""

__version__ = "0.1.0"

FORMAT_VERSION = 1
