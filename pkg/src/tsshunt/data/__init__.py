"""Bundled data files (lexicon, stopwords, suffix list, engine descriptors)."""
