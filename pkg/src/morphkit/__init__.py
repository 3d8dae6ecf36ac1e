"""Desk-scale morphosyntactic toolkit.

CoNLL-U data handling, lemmatization via edit-script rule classification, a
joint bi-LSTM tagger with a biaffine dependency parser, dictionary-constrained
morphological decoding, nested named entity recognition as seq2seq over
linearized labels, and the standard treebank evaluation metrics.
"""

__version__ = "0.1.0"
