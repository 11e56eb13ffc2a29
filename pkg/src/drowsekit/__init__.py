"""Camera-based driver drowsiness classification.

Pipeline: synthetic (or recorded) driving sessions -> blink and head-movement
feature extraction over sliding windows -> leave-one-subject-out k-NN
classification with wrapper and filter feature-subset search, plus a
one-vs-one multiclass refinement.
"""

__version__ = "0.1.0"
