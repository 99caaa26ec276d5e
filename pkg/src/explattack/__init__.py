"""Edge-mask GNN explanations and structure-perturbation attacks on them."""

__version__ = "0.1.0"
