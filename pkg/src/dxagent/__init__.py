"""Sequential medical-diagnosis engine: a symptom-inquiring policy trained by
policy gradients alongside a disease classifier, coupled through adaptive
per-disease entropy thresholds that decide when to stop asking and diagnose.
"""

__version__ = "0.1.0"
