"""Exact attribution scores and score alignment for Boolean queries."""
