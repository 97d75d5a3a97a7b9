"""One-class SVM solved in the dual by pairwise coordinate optimization.

Dual problem (RBF kernel K):

    min_a  1/2 a' K a    s.t.  0 <= a_i <= 1/(nu n),  sum a_i = 1

Each step moves mass between the most violating pair (largest KKT gap);
convergence is declared when the gap drops below the tolerance. The decision
value of a point is sum_i a_i K(x_i, x) - rho, negative meaning anomalous.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParams, NoConvergence
from . import Vote, check_dimension

KKT_TOL = 1e-6
MAX_SMO_ITER = 500_000
BOUND_EPS = 1e-12


@dataclass(frozen=True)
class OcsvmModel:
    train: np.ndarray
    alpha: np.ndarray      # full dual vector, mostly zeros
    rho: float
    gamma: float
    nu: float
    kkt_residual: float

    @property
    def dim(self):
        return self.train.shape[1]

    @property
    def support_mask(self):
        return self.alpha > BOUND_EPS


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * d2)


def default_gamma(train: np.ndarray) -> float:
    variances = train.var(axis=0)
    mean_var = float(variances.mean())
    if mean_var <= 0.0:
        return 1.0
    return 1.0 / (train.shape[1] * mean_var)


def fit_ocsvm(train, nu=0.05, gamma=None, tol=KKT_TOL,
              max_iter=MAX_SMO_ITER) -> OcsvmModel:
    train = np.asarray(train, dtype=float)
    n = len(train)
    if n == 0:
        raise InvalidParams("empty training set")
    if not 0.0 < nu <= 1.0:
        raise InvalidParams(f"nu must be in (0, 1]: {nu}")
    if gamma is None:
        gamma = default_gamma(train)
    if gamma <= 0.0:
        raise InvalidParams(f"gamma must be positive: {gamma}")

    K = rbf_kernel(train, train, gamma)
    C = 1.0 / (nu * n)

    # standard feasible start: fill the box from the front
    alpha = np.zeros(n)
    full = int(np.floor(nu * n))
    alpha[:full] = C
    if full < n:
        alpha[full] = 1.0 - full * C
    grad = K @ alpha

    residual = np.inf
    for _ in range(max_iter):
        up = alpha < C - BOUND_EPS
        low = alpha > BOUND_EPS
        gi = np.where(up, grad, np.inf)
        gj = np.where(low, grad, -np.inf)
        i = int(gi.argmin())
        j = int(gj.argmax())
        residual = grad[j] - grad[i]
        if residual <= tol:
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        step = min((grad[j] - grad[i]) / quad, C - alpha[i], alpha[j])
        alpha[i] += step
        alpha[j] -= step
        grad += step * (K[:, i] - K[:, j])
    else:
        raise NoConvergence(
            f"SMO did not reach tolerance {tol} in {max_iter} iterations "
            f"(residual {residual:.3g})"
        )

    free = (alpha > BOUND_EPS) & (alpha < C - BOUND_EPS)
    if free.any():
        rho = float(grad[free].mean())
    else:
        rho = float((grad[j] + grad[i]) / 2.0)
    # points sitting exactly on the boundary classify as normal: their
    # decision value jitters within the solver tolerance of zero
    rho -= tol
    return OcsvmModel(
        train=train, alpha=alpha, rho=rho, gamma=gamma, nu=nu,
        kkt_residual=float(max(residual, 0.0)),
    )


def decision_ocsvm(model: OcsvmModel, x) -> float:
    x = check_dimension(model.dim, x)
    mask = model.support_mask
    sv = model.train[mask]
    k = np.exp(-model.gamma * ((sv - x) ** 2).sum(axis=1))
    return float(model.alpha[mask] @ k - model.rho)


def predict_ocsvm(model: OcsvmModel, x) -> Vote:
    return Vote.ANOMALY if decision_ocsvm(model, x) < 0.0 else Vote.NORMAL


def kkt_residual(model: OcsvmModel) -> float:
    """Recompute the maximal violating-pair gap from the stored dual."""
    K = rbf_kernel(model.train, model.train, model.gamma)
    grad = K @ model.alpha
    C = 1.0 / (model.nu * len(model.train))
    up = model.alpha < C - BOUND_EPS
    low = model.alpha > BOUND_EPS
    return float(grad[low].max() - grad[up].min())
