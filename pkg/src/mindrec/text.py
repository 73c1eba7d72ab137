"""Tokenization and the bundled English stop list.

One tokenizer is used everywhere terms are produced or counted so that
node word counts and extracted features agree with each other.
"""

import re

_TOKEN_RE = re.compile(r"[^0-9a-z]+")

# Compact English stop list; kept small and fixed so results are stable.
STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because
been before being below between both but by can could did do does doing
down during each few for from further had has have having he her here hers
herself him himself his how i if in into is it its itself just me more most
my myself no nor not now of off on once only or other our ours ourselves
out over own same she should so some such than that the their theirs them
themselves then there these they this those through to too under until up
very was we were what when where which while who whom why will with you
your yours yourself yourselves
""".split())


def tokenize(text, remove_stopwords=False):
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2.

    Returns the token list in occurrence order.
    """
    tokens = [t for t in _TOKEN_RE.split(text.lower()) if len(t) >= 2]
    if remove_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]
    return tokens
