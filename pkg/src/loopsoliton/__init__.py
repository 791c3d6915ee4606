"""Loop-soliton curves from Weierstrass (genus 1) and Kleinian (genus 2) sigma functions."""

from . import elliptic, errors, hyperelliptic, numkernel, soliton, theta
from .errors import LoopSolitonError

__version__ = "0.1.0"
__all__ = ["elliptic", "errors", "hyperelliptic", "numkernel", "soliton", "theta", "LoopSolitonError"]
