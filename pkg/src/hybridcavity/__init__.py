"""Design toolkit for hybrid diamond-air Fabry-Perot microcavities."""

__version__ = "0.1.0"
