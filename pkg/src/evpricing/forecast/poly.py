"""Least-squares polynomial regression over the full multivariate monomial basis."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from ..errors import EmptyData, ShapeMismatch, SingularSystem


def monomial_terms(n_features: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent-free term list: () is the intercept, (i, j) the product x_i x_j, and so on."""
    terms: list[tuple[int, ...]] = []
    for d in range(degree + 1):
        terms.extend(combinations_with_replacement(range(n_features), d))
    return terms


def expand(X, terms) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    cols = [np.ones(X.shape[0])]
    cols += [np.prod(X[:, list(t)], axis=1) for t in terms if t]
    return np.column_stack(cols)


@dataclass
class PolyModel:
    degree: int
    n_features: int
    coefficients: np.ndarray

    @property
    def terms(self) -> list[tuple[int, ...]]:
        return monomial_terms(self.n_features, self.degree)

    def coefficient(self, *features: int) -> float:
        """Coefficient of the monomial given by feature indices, e.g. ``coefficient(0, 1)``."""
        return float(self.coefficients[self.terms.index(tuple(sorted(features)))])

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"model expects {self.n_features} columns")
        return expand(X, self.terms) @ self.coefficients

    def to_dict(self) -> dict:
        return {"degree": self.degree, "n_features": self.n_features, "coefficients": self.coefficients.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PolyModel":
        model = cls(int(d["degree"]), int(d["n_features"]), np.asarray(d["coefficients"], dtype=float))
        if model.coefficients.size != len(model.terms):
            raise ShapeMismatch("coefficient count does not match the monomial basis")
        return model


def fit_poly(X, y, degree: int = 2) -> PolyModel:
    """Solve the least-squares problem with an SVD-based solver; rank loss is an error."""
    X = np.asarray(getattr(X, "values", X), dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeMismatch("X must be 2-D with one row per target")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if X.shape[0] == 0:
        raise EmptyData("cannot fit on an empty dataset")
    terms = monomial_terms(X.shape[1], degree)
    if X.shape[0] <= len(terms):
        raise SingularSystem(f"need more than {len(terms)} rows for {len(terms)} basis terms")
    A = expand(X, terms)
    # Column scaling keeps the rank test meaningful when features differ in magnitude.
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise SingularSystem("a basis column is identically zero")
    coef, _, rank, _ = np.linalg.lstsq(A / norms, y, rcond=None)
    if rank < len(terms):
        raise SingularSystem(f"basis rank {rank} < {len(terms)} terms")
    return PolyModel(degree, X.shape[1], coef / norms)
