"""Causal inference under spatial confounding and interference."""

__version__ = "0.1.0"
