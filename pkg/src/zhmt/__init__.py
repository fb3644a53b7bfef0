"""Desk-scale Chinese-centric multilingual MT toolkit.

Corpus construction and cleaning for monolingual and parallel text,
curriculum-weighted instruction tuning of a frozen-backbone decoder with
sparse expert layers, back-translation augmentation, and BLEU/chrF
evaluation.
"""

__version__ = "0.1.0"
