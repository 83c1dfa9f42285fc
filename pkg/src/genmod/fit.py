"""Fitting the generative model: sign prediction, Adam on the latent vector,
and weighted-Lasso updates of the sparse deviation, alternated until the
validation loss stops improving.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateInputError, DivergenceError
from .model import DEFAULT_WEIGHT_EPS, DecayModel, GenModelState, latent_size
from .pce import MultiIndexBasis
from .solvers.lasso_cd import lambda_grid, lasso_cv_stderr
from .solvers.greedy import omp_cv

__all__ = [
    "AdamState",
    "GenModConfig",
    "GenModFitReport",
    "adam_step",
    "assemble_coefficients",
    "genmod_fit",
    "initial_latent",
    "predict_signs",
    "run_adam",
    "sign_flip_count",
]


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    alpha_lr: float = 1e-2

    @classmethod
    def fresh(cls, size: int, **hyper) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0, **hyper)


def adam_step(z, grad, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One Adam update; ``state.t`` is the count of steps already taken."""
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError(
            "non-finite gradient in Adam step", step=state.t, gradient=grad.copy()
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    z_next = np.asarray(z, dtype=float) - state.alpha_lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)
    return z_next, replace(state, m=m, v=v, t=t)


def _clip_decay(z: np.ndarray, d: int) -> np.ndarray:
    # exponential-decay rates must stay non-negative
    z[1:d + 1] = np.maximum(z[1:d + 1], 0.0)
    return z


def run_adam(z_init, nu, zeta, psi_op, u_op, basis: MultiIndexBasis,
             max_adam_iter: int = 50000, delta_tol: float = 1e-6,
             adam: AdamState | None = None) -> list[np.ndarray]:
    """Adam iterates on the latent vector with ``nu`` and ``zeta`` held fixed.

    Stops once the relative loss change between consecutive iterates falls
    below ``delta_tol`` in absolute value.  The returned list starts with
    ``z_init``.
    """
    model = DecayModel(basis)
    psi = np.asarray(psi_op, dtype=float)
    u = np.asarray(u_op, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    z = model._check(np.array(z_init, dtype=float))
    state = adam or AdamState.fresh(latent_size(basis.d))
    base = psi @ nu - u

    def loss_and_grad(z):
        g = model.magnitudes(z)
        r = psi @ (zeta * g) + base
        return float(r @ r), 2.0 * model.design.T @ (g * zeta * (psi.T @ r))

    prev_loss, grad = loss_and_grad(z)
    if not np.isfinite(prev_loss):
        raise DivergenceError("loss is not finite at the initial latent vector", z=z.copy())
    iterates = [z.copy()]
    for _ in range(max_adam_iter):
        z, state = adam_step(z, grad, state)
        z = _clip_decay(z, basis.d)
        iterates.append(z.copy())
        loss, grad = loss_and_grad(z)
        if not np.isfinite(loss):
            raise DivergenceError("loss diverged during Adam iterations", step=state.t, z=z.copy())
        if prev_loss == 0.0 or abs(loss - prev_loss) / prev_loss < delta_tol:
            break
        prev_loss = loss
    return iterates


def predict_signs(psi, u, folds: int = 5, fold_seed=0) -> np.ndarray:
    """Coefficient signs from a cross-validated OMP fit.

    Unselected columns take the sign of their correlation with the OMP
    residual; an exactly zero correlation maps to +1.
    """
    psi = np.asarray(psi, dtype=float)
    u = np.asarray(u, dtype=float)
    coef = omp_cv(psi, u, folds=folds, fold_seed=fold_seed).coefficients
    corr = psi.T @ (u - psi @ coef)
    source = np.where(coef != 0, coef, corr)
    return np.where(source < 0, -1.0, 1.0)


def assemble_coefficients(state: GenModelState, basis: MultiIndexBasis) -> np.ndarray:
    """``zeta * G(z) + nu``."""
    return DecayModel(basis).coefficients(state)


def sign_flip_count(state: GenModelState, basis: MultiIndexBasis) -> int:
    """Coefficients whose sign the deviation ``nu`` reverses."""
    c = assemble_coefficients(state, basis)
    flipped = (np.sign(c) != state.zeta) & (state.nu != 0)
    return int(np.count_nonzero(flipped))


def initial_latent(u, d: int) -> np.ndarray:
    """Start at ``(log|mean u|, 1, ..., 1)``; falls back to the RMS when the mean is 0."""
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise DegenerateInputError("all observations are zero; recentre or rescale the data")
    level = abs(float(np.mean(u)))
    if level == 0.0:
        level = float(np.sqrt(np.mean(u * u)))
    return np.concatenate([[np.log(level)], np.ones(2 * d)])


@dataclass(frozen=True)
class GenModConfig:
    learning_rate: float = 1e-2
    max_outer: int = 20
    max_adam_iter: int = 50000
    delta_tol: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_eps: float = DEFAULT_WEIGHT_EPS
    weight_reference: str = "constant"
    sparse: bool = True
    folds: int = 5
    fold_seed: int = 0
    lasso_grid_size: int = 100
    lasso_grid_ratio: float = 1e-3


@dataclass
class GenModFitReport:
    state: GenModelState
    outer_iterations: int
    validation_loss_trace: list[float] = field(default_factory=list)
    sign_flip_count: int = 0
    chosen_lambdas: list[float] = field(default_factory=list)


def _sparse_update(model, z, zeta, psi, u, cfg: GenModConfig):
    # Lasso in x = W nu, so the l1 penalty on x is the weighted penalty on nu
    scale = 1.0 / model.weights(z, cfg.weight_eps, cfg.weight_reference)
    target = u - psi @ (zeta * model.magnitudes(z))
    design = psi * scale
    try:
        grid = lambda_grid(design, target, cfg.lasso_grid_size, cfg.lasso_grid_ratio)
    except DegenerateInputError:
        return np.zeros(psi.shape[1]), float("nan")
    fit = lasso_cv_stderr(design, target, grid, folds=cfg.folds, fold_seed=cfg.fold_seed,
                          tol=1e-9 * grid[0])
    return scale * fit.solution, fit.chosen_lambda


def genmod_fit(psi_op, u_op, psi_va, u_va, basis: MultiIndexBasis,
               config: GenModConfig | None = None) -> GenModFitReport:
    """Fit ``c = zeta * G(z) + nu`` from optimization and validation samples.

    Each outer iteration runs Adam on the optimization rows, keeps the
    iterate with the smallest validation loss, then refits the sparse
    deviation by a cross-validated weighted Lasso on all rows.  The loop ends
    when the validation loss no longer decreases; the reported state then
    keeps the last deviation together with the newest latent vector, which is
    never worse on validation data than the previous accepted state.
    With ``config.sparse`` false a single outer iteration runs and ``nu``
    stays zero.
    """
    cfg = config or GenModConfig()
    model = DecayModel(basis)
    psi_op = np.asarray(psi_op, dtype=float)
    psi_va = np.asarray(psi_va, dtype=float)
    u_op = np.asarray(u_op, dtype=float)
    u_va = np.asarray(u_va, dtype=float)
    if psi_op.shape[1] != basis.size or psi_va.shape[1] != basis.size:
        raise ValueError("measurement matrices must have one column per basis term")
    if psi_op.shape[0] != u_op.size or psi_va.shape[0] != u_va.size:
        raise ValueError("row counts and observation counts differ")
    if u_op.size < 1 or u_va.size < 1:
        raise ValueError("optimization and validation sets must be non-empty")
    psi_all = np.vstack([psi_op, psi_va])
    u_all = np.concatenate([u_op, u_va])

    zeta = predict_signs(psi_all, u_all, cfg.folds, cfg.fold_seed)
    z = initial_latent(u_all, basis.d)
    nu = np.zeros(basis.size)

    def validation_losses(zs, nu):
        logg = model.log_mult[:, None] + model.design @ np.asarray(zs).T
        r = psi_va @ (zeta[:, None] * np.exp(logg) + nu[:, None]) - u_va[:, None]
        return (r * r).sum(axis=0)

    best_val = float(validation_losses([z], nu)[0])
    trace = [best_val]
    lambdas: list[float] = []
    outer_cap = cfg.max_outer if cfg.sparse else 1
    done = 0
    for _ in range(outer_cap):
        adam = AdamState.fresh(z.size, beta1=cfg.beta1, beta2=cfg.beta2,
                               eps_adam=cfg.adam_eps, alpha_lr=cfg.learning_rate)
        iterates = run_adam(z, nu, zeta, psi_op, u_op, basis, cfg.max_adam_iter,
                            cfg.delta_tol, adam)
        vals = validation_losses(iterates, nu)
        pick = int(np.argmin(vals))
        z_new = iterates[pick]
        done += 1
        if not cfg.sparse:
            z = z_new
            trace.append(float(vals[pick]))
            break
        nu_new, lam = _sparse_update(model, z_new, zeta, psi_all, u_all, cfg)
        val = float(validation_losses([z_new], nu_new)[0])
        trace.append(val)
        if val >= best_val:
            # keep the previous deviation; the new latent vector cannot be worse with it
            z = z_new
            break
        z, nu, best_val = z_new, nu_new, val
        lambdas.append(lam)

    state = GenModelState(z, zeta, nu)
    return GenModFitReport(
        state=state,
        outer_iterations=done,
        validation_loss_trace=trace,
        sign_flip_count=sign_flip_count(state, basis),
        chosen_lambdas=lambdas,
    )
