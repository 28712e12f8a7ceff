"""Default stopword list for the tokenizer.

Compact English list plus a few short-text artifacts ("rt", "amp", "ok").
Experiments that need a different list pass their own file; this default is
only here so the pipeline runs out of the box.
"""

DEFAULT_STOPWORDS = frozenset(
    """
    a about after all also am an and any are as at be because been before
    being between both but by can could did do does down during each few for
    from further had has have having he her here hers him his how if in into
    is it its just me more most my no nor not now of off ok on once only or
    other our out over own same she should so some such than that the their
    them then there these they this those through to too under until up very
    was we were what when where which while who why will with would you your
    rt amp via
    """.split()
)
