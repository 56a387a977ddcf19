"""Trust-region Levenberg-Marquardt for nonlinear least squares.

The loop follows MINPACK's ``lmder``: column-norm scaling ``D`` that only
grows, a trust radius on ``||D p||`` adapted from the gain ratio, and the
ftol/xtol/gtol convergence tests. The constrained step is computed from an
SVD of the scaled Jacobian, so rank-deficient Jacobians give the
minimum-norm step instead of a factorisation failure.

``max_iterations`` bounds the number of Jacobian evaluations. ``nfev``
includes the evaluation at the starting point.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .conditioning import EPS, analyze
from .diff import jacobian
from .expr import ExprTree, extract_parameters, residuals

ACCEPT_RATIO = 1e-4
MAX_REJECTIONS = 60


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class LMConfig:
    max_iterations: int = 10
    ftol: float = 1.49012e-8
    xtol: float = 1.49012e-8
    gtol: float = 0.0
    factor: float = 100.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if min(self.ftol, self.xtol) <= 0 or self.gtol < 0 or self.factor <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class LocalOptResult:
    theta: np.ndarray
    ssr: float
    initial_ssr: float
    nfev: int
    njev: int
    termination: Termination
    reports: list = field(default_factory=list)
    history: list[float] = field(default_factory=list)  # accepted objective values


def _lm_step(s, g, V, delta, cutoff):
    """Solve ``min ||J p + F||`` s.t. ``||q|| <= delta`` in scaled variables ``q = D p``.

    ``s, V`` come from the SVD ``Js = U diag(s) V^T`` of the scaled Jacobian and
    ``g = U^T F``. Returns ``(q, lam)``.
    """
    keep = s > cutoff
    s, g, V = s[keep], g[keep], V[:, keep]
    if len(s) == 0:
        return np.zeros(V.shape[0]), 0.0
    coef = -g / s
    qnorm = math.hypot(*coef) if len(coef) > 1 else abs(coef[0])
    if qnorm <= 1.1 * delta:
        return V @ coef, 0.0
    # Newton iteration on 1/||q(lam)|| - 1/delta (nearly linear in lam),
    # safeguarded by the bracket [0, ||s g|| / delta] where ||q|| <= delta
    s2, sg2 = s * s, (s * g) ** 2
    lo, hi = 0.0, math.sqrt(float(np.sum(sg2))) / delta
    lam = 0.0
    for _ in range(30):
        denom = s2 + lam
        with np.errstate(over="ignore", divide="ignore", under="ignore"):
            qn2 = float(np.sum(sg2 / denom**2))
            dqn2 = -2.0 * float(np.sum(sg2 / denom**3))
        qn = math.sqrt(qn2)
        if abs(qn - delta) <= 0.1 * delta:
            break
        if qn > delta:
            lo = lam
        else:
            hi = lam
        # delta * dqn2 underflows to zero for tiny radii; fall back to bisection
        slope = delta * dqn2
        if math.isfinite(qn2) and math.isfinite(slope) and slope < 0.0:
            lam_new = lam + 2.0 * qn2 * (delta - qn) / slope
        else:
            lam_new = math.inf
        if not (lo < lam_new < hi):
            lam_new = 0.5 * (lo + hi) if lo > 0 else max(0.001 * hi, math.sqrt(lo * hi))
        lam = lam_new
    coef = -(s * g) / (s2 + lam)
    return V @ coef, lam


def levenberg_marquardt(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    jacobian_fn: Callable[[np.ndarray], np.ndarray],
    theta0,
    config: LMConfig | None = None,
    hook: Callable[[np.ndarray], Any] | None = analyze,
) -> LocalOptResult:
    """Minimise ``||residual_fn(theta)||^2`` starting from ``theta0``.

    ``hook`` is called with every finite Jacobian before the step is computed;
    its return values are collected in ``result.reports``.

    Non-finite trial residuals count as rejected steps and shrink the trust
    region. A non-finite Jacobian stops the run at the last accepted point.
    """
    config = config or LMConfig()
    x = np.array(theta0, dtype=float)
    reports: list = []
    F = np.asarray(residual_fn(x), dtype=float)
    nfev, njev = 1, 0
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(F)):
        ssr = math.inf if not np.all(np.isfinite(F)) else float(F @ F)
        return LocalOptResult(x, ssr, ssr, nfev, njev, Termination.NUMERICAL_FAILURE, reports, [])
    fnorm = float(np.linalg.norm(F))
    initial = fnorm**2
    history = [initial]

    def done(term):
        return LocalOptResult(x, fnorm**2, initial, nfev, njev, term, reports, history)

    if x.size == 0 or fnorm == 0.0:
        return done(Termination.CONVERGED)

    diag = None
    delta = 0.0
    for iteration in range(config.max_iterations):
        J = np.asarray(jacobian_fn(x), dtype=float)
        njev += 1
        if not np.all(np.isfinite(J)):
            return done(Termination.NUMERICAL_FAILURE)
        if hook is not None:
            reports.append(hook(J))

        with np.errstate(over="ignore", invalid="ignore"):
            colnorms = np.linalg.norm(J, axis=0)
        if diag is None:
            diag = np.where(colnorms == 0.0, 1.0, colnorms)
            xnorm = float(np.linalg.norm(diag * x))
            delta = config.factor * xnorm if xnorm > 0 else config.factor
        else:
            diag = np.maximum(diag, colnorms)

        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            gradient = J.T @ F
            cosines = np.where(colnorms > 0, np.abs(gradient) / (colnorms * fnorm), 0.0)
        if float(np.max(cosines)) <= config.gtol:
            return done(Termination.CONVERGED)

        Js = J / diag
        U, s, Vt = np.linalg.svd(Js, full_matrices=False)
        g = U.T @ F
        cutoff = max(Js.shape) * EPS * (s[0] if len(s) else 0.0)
        V = Vt.T

        for _ in range(MAX_REJECTIONS):
            q, lam = _lm_step(s, g, V, delta, cutoff)
            p = q / diag
            pnorm = float(np.linalg.norm(q))
            if iteration == 0:
                delta = min(delta, pnorm) if pnorm > 0 else delta
            x_new = x + p
            F_new = np.asarray(residual_fn(x_new), dtype=float)
            nfev += 1
            finite = bool(np.all(np.isfinite(F_new)))
            if finite:
                fnorm1 = float(np.linalg.norm(F_new))
                actred = 1.0 - (fnorm1 / fnorm) ** 2 if 0.1 * fnorm1 < fnorm else -1.0
            else:
                actred = -math.inf
            jp = float(np.linalg.norm(J @ p)) / fnorm
            t2 = math.sqrt(lam) * pnorm / fnorm
            prered = jp * jp + 2.0 * t2 * t2
            ratio = actred / prered if prered > 0 else 0.0

            if ratio <= 0.25:
                delta = 0.5 * min(delta, 10.0 * pnorm) if pnorm > 0 else 0.5 * delta
            elif lam == 0.0 or ratio >= 0.75:
                delta = 2.0 * pnorm

            accepted = ratio > ACCEPT_RATIO and actred > 0
            if accepted:
                x, F, fnorm = x_new, F_new, fnorm1
                history.append(fnorm**2)
                if fnorm == 0.0:
                    return done(Termination.CONVERGED)

            xnorm = float(np.linalg.norm(diag * x))
            if finite and abs(actred) <= config.ftol and prered <= config.ftol and 0.5 * ratio <= 1.0:
                return done(Termination.CONVERGED)
            if delta <= config.xtol * xnorm or pnorm == 0.0:
                return done(Termination.CONVERGED)
            if accepted:
                break
        else:
            return done(Termination.CONVERGED)
    return done(Termination.MAX_ITERATIONS)


def fit_tree(tree: ExprTree, X, y, theta0=None, config: LMConfig | None = None, hook=analyze) -> LocalOptResult:
    """Run LM on a tree's parameters against data ``(X, y)``."""
    theta0 = extract_parameters(tree) if theta0 is None else theta0
    return levenberg_marquardt(
        lambda th: residuals(tree, th, X, y),
        lambda th: jacobian(tree, th, X),
        theta0,
        config,
        hook,
    )


def perturb(theta, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Random point near ``theta``: a sign-preserving factor from U[0.5, 2]
    plus additive noise ``0.1 |theta| N(0, 1)``, both scaled by ``scale``."""
    theta = np.asarray(theta, dtype=float)
    factor = 1.0 + scale * (rng.uniform(0.5, 2.0, theta.shape) - 1.0)
    noise = scale * 0.1 * np.abs(theta) * rng.standard_normal(theta.shape)
    return theta * factor + noise


@dataclass
class RestartSummary:
    mean_nfev: float
    mean_njev: float
    success_rate: float
    best_ssr: float
    reference_theta: np.ndarray
    n_failed: int


def multistart_fit(tree: ExprTree, X, y, n_starts: int, seed: int = 0, scale: float = 1.0,
                   config: LMConfig | None = None, hook=None) -> LocalOptResult:
    """Best LM result over ``n_starts`` independent starts: the tree's own
    parameters, then perturbations of them."""
    config = config or LMConfig(max_iterations=100)
    rng = np.random.default_rng(seed)
    center = extract_parameters(tree)
    best = fit_tree(tree, X, y, config=config, hook=hook)
    for _ in range(n_starts - 1):
        res = fit_tree(tree, X, y, theta0=perturb(center, scale, rng), config=config, hook=hook)
        if res.ssr < best.ssr:
            best = res
    return best


def restart_experiment(tree: ExprTree, X, y, n_restarts: int = 1000, perturbation_scale: float = 1.0,
                       seed: int = 0, config: LMConfig | None = None, reference_starts: int = 50,
                       success_rtol: float = 1e-6) -> RestartSummary:
    """Perturb a reference optimum ``n_restarts`` times and rerun LM from each point.

    A restart succeeds when its final SSR is within ``success_rtol`` of the best
    SSR seen (reference fit or any restart).
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    config = config or LMConfig(max_iterations=100)
    ref = multistart_fit(tree, X, y, reference_starts, seed=seed, config=config)
    rng = np.random.default_rng([seed, 1])
    ssr, nfev, njev = [], [], []
    failed = 0
    for _ in range(n_restarts):
        res = fit_tree(tree, X, y, theta0=perturb(ref.theta, perturbation_scale, rng), config=config, hook=None)
        if res.termination is Termination.NUMERICAL_FAILURE and not math.isfinite(res.ssr):
            failed += 1
        ssr.append(res.ssr)
        nfev.append(res.nfev)
        njev.append(res.njev)
    if failed == n_restarts:
        raise RuntimeError("every restart failed numerically")
    ssr = np.array(ssr)
    best = min(ref.ssr, float(np.min(ssr)))
    success = float(np.mean(ssr <= (1.0 + success_rtol) * best))
    return RestartSummary(
        mean_nfev=float(np.mean(nfev)),
        mean_njev=float(np.mean(njev)),
        success_rate=success,
        best_ssr=best,
        reference_theta=ref.theta,
        n_failed=failed,
    )
