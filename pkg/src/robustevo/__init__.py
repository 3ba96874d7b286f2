"""Neuroevolution of controllers that are robust to environmental variation."""

__version__ = "0.1.0"


def __getattr__(name):
    # scikit-learn is only needed for the estimator wrapper; import it on demand
    if name == "RobustEvolver":
        from .estimator import RobustEvolver
        return RobustEvolver
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
