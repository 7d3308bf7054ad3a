from __future__ import annotations

from dataclasses import dataclass

from .base import Dataset, LinearModel, Predictor, canonical_order, ols, require_rows

RIDGE = 1e-8


@dataclass(frozen=True, eq=False)
class LinearRegression(Predictor):
    algorithm = "LinearRegression"

    arity: int
    model: LinearModel

    @property
    def intercept(self) -> float:
        return self.model.intercept

    @property
    def coef(self) -> tuple[float, ...]:
        return self.model.coef

    def _predict(self, x):
        return self.model(x)

    def to_params(self):
        return {"intercept": self.model.intercept, "coef": list(self.model.coef)}

    @classmethod
    def from_params(cls, arity, params):
        coef = tuple(float(c) for c in params["coef"])
        return cls(arity, LinearModel(float(params["intercept"]), tuple(range(len(coef))), coef))


def fit_linear_regression(d: Dataset, ridge: float = RIDGE) -> LinearRegression:
    """OLS over every feature plus an intercept.

    Singular normal equations fall back to a ridge of ``ridge`` on the
    diagonal, which also zeroes the slope of any constant feature.
    """
    require_rows(d)
    order = canonical_order(d.X, d.y)
    intercept, coef = ols(d.X[order], d.y[order], ridge=ridge)
    p = d.n_features
    return LinearRegression(p, LinearModel(float(intercept), tuple(range(p)), tuple(float(c) for c in coef)))
