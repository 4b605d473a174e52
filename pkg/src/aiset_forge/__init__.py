"""Almost invariant sets, their crossings, cubings and regular neighbourhoods."""

__version__ = "0.1.0"
