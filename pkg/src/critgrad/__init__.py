"""Finite-difference lab for −Δu = (λc₊ − c₋)u + μ|∇u|² + h with zero Dirichlet data."""

__version__ = "0.1.0"
