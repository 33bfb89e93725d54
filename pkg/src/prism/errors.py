class PrismError(Exception):
    """Raised for invalid inputs, malformed streams, and undefined metrics.

    The CLI maps this (and only this) exception type to a one-line
    diagnostic and a nonzero exit status; anything else is a bug.
    """
