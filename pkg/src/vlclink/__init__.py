"""Link-level simulation toolkit for LED-based visible-light communication."""

__version__ = "0.1.0"
