"""Sentence CNNs for detecting adverse-drug-reaction sentences in the ADE corpus."""

__version__ = "0.1.0"
