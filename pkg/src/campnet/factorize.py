"""Regularized NMF solvers with multiplicative updates.

Three variants share one objective family: reconstruct user-by-feature
count matrices as nonnegative low-rank products while penalizing factor
disagreement across user-connectivity and feature-similarity Laplacians.
The full variant factorizes words, hashtags, and domains jointly; the
three-factor variant drops domains; the two-factor variant keeps only the
user-word matrix. Each update multiplies a factor elementwise by the
square root of a ratio of the nonnegative parts of its gradient, which
preserves nonnegativity and does not increase the objective.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from campnet.graph import UserGraph
from campnet.similarity import SimilarityMatrix

logger = logging.getLogger(__name__)


class SolverDivergence(Exception):
    """Non-finite values appeared during iteration."""


@dataclass
class SolverConfig:
    k: int
    alpha: float = 0.0  # user connectivity weight
    beta: float = 0.0  # word similarity weight
    gamma: float = 0.0  # hashtag similarity weight
    theta: float = 0.0  # domain similarity weight
    max_iters: int = 500
    rel_tol: float = 1e-6
    epsilon_guard: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if min(self.alpha, self.beta, self.gamma, self.theta) < 0:
            raise ValueError("regularizer weights must be >= 0")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")


@dataclass
class FactorSet:
    U: np.ndarray
    W: np.ndarray
    H: np.ndarray | None = None
    D: np.ndarray | None = None
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


@dataclass
class Partition:
    assignment: np.ndarray  # user index -> community index in [0, k)
    k: int
    zero_rows: int = 0


def _as_sparse(x) -> sp.csr_matrix:
    if isinstance(x, UserGraph):
        return x.weights
    if isinstance(x, SimilarityMatrix):
        return x.values
    return sp.csr_matrix(x, dtype=np.float64)


def _lap_parts(obj) -> tuple[np.ndarray, sp.csr_matrix]:
    """Degree vector (positive Laplacian part) and adjacency (negative part)."""
    adj = _as_sparse(obj).astype(np.float64)
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    return degrees, adj


def _frob2(x: sp.csr_matrix, a: np.ndarray, b: np.ndarray) -> float:
    """||x - a b^T||_F^2 without materializing the dense residual."""
    if x.shape[1] == 0:
        return 0.0
    xx = float(x.multiply(x).sum())
    cross = float(np.sum(a * (x @ b)))
    quad = float(np.sum((a.T @ a) * (b.T @ b)))
    return xx - 2.0 * cross + quad


def _lap_quad(deg: np.ndarray, adj: sp.csr_matrix, f: np.ndarray) -> float:
    """Tr(F^T L F) with L = diag(deg) - adj."""
    if f.shape[0] == 0:
        return 0.0
    return float(np.sum(f * (deg[:, None] * f)) - np.sum(f * (adj @ f)))


def objective(
    factors: FactorSet,
    cfg: SolverConfig,
    x_uw,
    c,
    w_sim,
    x_uh=None,
    h_sim=None,
    x_ud=None,
    d_sim=None,
) -> float:
    """Exact objective value for whichever blocks are supplied."""
    x_uw = _as_sparse(x_uw)
    deg_c, adj_c = _lap_parts(c)
    deg_w, adj_w = _lap_parts(w_sim)
    j = _frob2(x_uw, factors.U, factors.W)
    if x_uh is not None:
        j += _frob2(_as_sparse(x_uh), factors.U, factors.H)
    if x_ud is not None:
        j += _frob2(_as_sparse(x_ud), factors.U, factors.D)
    j += cfg.alpha * _lap_quad(deg_c, adj_c, factors.U)
    if h_sim is not None:
        deg_h, adj_h = _lap_parts(h_sim)
        j += cfg.gamma * _lap_quad(deg_h, adj_h, factors.H)
    if d_sim is not None:
        deg_d, adj_d = _lap_parts(d_sim)
        j += cfg.theta * _lap_quad(deg_d, adj_d, factors.D)
    j += cfg.beta * _lap_quad(deg_w, adj_w, factors.W)
    return j


def gradients(
    factors: FactorSet,
    cfg: SolverConfig,
    x_uw,
    c,
    w_sim,
    x_uh=None,
    h_sim=None,
    x_ud=None,
    d_sim=None,
) -> dict[str, np.ndarray]:
    """Objective gradients with respect to each present factor."""
    x_uw = _as_sparse(x_uw)
    deg_c, adj_c = _lap_parts(c)
    deg_w, adj_w = _lap_parts(w_sim)
    u, w = factors.U, factors.W
    grad_u = u @ (w.T @ w) - x_uw @ w
    if x_uh is not None:
        h = factors.H
        grad_u += u @ (h.T @ h) - _as_sparse(x_uh) @ h
    if x_ud is not None:
        d = factors.D
        grad_u += u @ (d.T @ d) - _as_sparse(x_ud) @ d
    grad_u += cfg.alpha * (deg_c[:, None] * u - adj_c @ u)
    out = {"U": 2.0 * grad_u}
    out["W"] = 2.0 * (w @ (u.T @ u) - x_uw.T @ u + cfg.beta * (deg_w[:, None] * w - adj_w @ w))
    if x_uh is not None:
        deg_h, adj_h = _lap_parts(h_sim)
        h = factors.H
        out["H"] = 2.0 * (
            h @ (u.T @ u) - _as_sparse(x_uh).T @ u + cfg.gamma * (deg_h[:, None] * h - adj_h @ h)
        )
    if x_ud is not None:
        deg_d, adj_d = _lap_parts(d_sim)
        d = factors.D
        out["D"] = 2.0 * (
            d @ (u.T @ u) - _as_sparse(x_ud).T @ u + cfg.theta * (deg_d[:, None] * d - adj_d @ d)
        )
    return out


def kkt_residual(
    factors: FactorSet,
    cfg: SolverConfig,
    x_uw,
    c,
    w_sim,
    x_uh=None,
    h_sim=None,
    x_ud=None,
    d_sim=None,
) -> float:
    """Max complementarity product |factor entry * gradient entry|.

    At a KKT point each factor entry or its gradient vanishes, so the
    product tends to zero with convergence.
    """
    grads = gradients(factors, cfg, x_uw, c, w_sim, x_uh, h_sim, x_ud, d_sim)
    worst = 0.0
    for name, g in grads.items():
        f = getattr(factors, name)
        if f.size:
            worst = max(worst, float(np.max(np.abs(f * g))))
    return worst


def _positive_init(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    # (0, 1]: strictly positive entries avoid zero-locking of the updates
    return 1.0 - rng.random(shape)


def _step(f: np.ndarray, numer: np.ndarray, denom: np.ndarray, eps: float, name: str, it: int) -> np.ndarray:
    updated = f * np.sqrt(numer / (denom + eps))
    if not np.all(np.isfinite(updated)):
        raise SolverDivergence(f"non-finite values in factor {name} at iteration {it}")
    return updated


def _check_dims(name: str, got, want) -> None:
    if got != want:
        raise ValueError(f"dimension mismatch for {name}: {got} != {want}")


def multi_nmf(x_uw, x_uh, x_ud, c, h_sim, d_sim, w_sim, cfg: SolverConfig, init=None) -> FactorSet:
    """Joint factorization of word, hashtag, and domain count matrices.

    `init` optionally supplies starting factors (U, H, D, W) instead of the
    seeded random draw.
    """
    x_uw, x_uh, x_ud = _as_sparse(x_uw), _as_sparse(x_uh), _as_sparse(x_ud)
    n_u, n_w = x_uw.shape
    n_h, n_d = x_uh.shape[1], x_ud.shape[1]
    _check_dims("X_uh rows", x_uh.shape[0], n_u)
    _check_dims("X_ud rows", x_ud.shape[0], n_u)
    deg_c, adj_c = _lap_parts(c)
    deg_h, adj_h = _lap_parts(h_sim)
    deg_d, adj_d = _lap_parts(d_sim)
    deg_w, adj_w = _lap_parts(w_sim)
    _check_dims("connectivity size", adj_c.shape[0], n_u)
    _check_dims("hashtag similarity size", adj_h.shape[0], n_h)
    _check_dims("domain similarity size", adj_d.shape[0], n_d)
    _check_dims("word similarity size", adj_w.shape[0], n_w)

    if init is not None:
        u, h, d, w = (np.array(m, dtype=np.float64) for m in init)
    else:
        rng = np.random.default_rng(cfg.seed)
        u = _positive_init(rng, (n_u, cfg.k))
        h = _positive_init(rng, (n_h, cfg.k))
        d = _positive_init(rng, (n_d, cfg.k))
        w = _positive_init(rng, (n_w, cfg.k))
    eps = cfg.epsilon_guard

    def obj():
        return objective(FactorSet(U=u, W=w, H=h, D=d), cfg, x_uw, adj_c, adj_w, x_uh, adj_h, x_ud, adj_d)

    trace = [obj()]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        u = _step(
            u,
            x_uw @ w + x_uh @ h + x_ud @ d + cfg.alpha * (adj_c @ u),
            u @ (w.T @ w + h.T @ h + d.T @ d) + cfg.alpha * (deg_c[:, None] * u),
            eps, "U", it,
        )
        utu = u.T @ u
        h = _step(
            h,
            x_uh.T @ u + cfg.gamma * (adj_h @ h),
            h @ utu + cfg.gamma * (deg_h[:, None] * h),
            eps, "H", it,
        )
        d = _step(
            d,
            x_ud.T @ u + cfg.theta * (adj_d @ d),
            d @ utu + cfg.theta * (deg_d[:, None] * d),
            eps, "D", it,
        )
        w = _step(
            w,
            x_uw.T @ u + cfg.beta * (adj_w @ w),
            w @ utu + cfg.beta * (deg_w[:, None] * w),
            eps, "W", it,
        )
        trace.append(obj())
        if abs(trace[-1] - trace[-2]) / max(trace[-2], eps) < cfg.rel_tol:
            converged = True
            break
    return FactorSet(U=u, W=w, H=h, D=d, objective_trace=trace, iterations=it, converged=converged)


def tri_nmf(
    x_uw,
    x_uf,
    c,
    f_sim,
    w_sim,
    cfg: SolverConfig,
    feature_kind: str = "hashtag",
    init=None,
) -> FactorSet:
    """Factorize words plus one secondary feature family (hashtags or domains).

    `feature_kind` selects which similarity weight applies to the secondary
    block: gamma for hashtags, theta for domains.
    """
    if feature_kind not in ("hashtag", "domain"):
        raise ValueError("feature_kind must be 'hashtag' or 'domain'")
    weight = cfg.gamma if feature_kind == "hashtag" else cfg.theta
    x_uw, x_uf = _as_sparse(x_uw), _as_sparse(x_uf)
    n_u, n_w = x_uw.shape
    n_f = x_uf.shape[1]
    _check_dims("X_uf rows", x_uf.shape[0], n_u)
    deg_c, adj_c = _lap_parts(c)
    deg_f, adj_f = _lap_parts(f_sim)
    deg_w, adj_w = _lap_parts(w_sim)
    _check_dims("connectivity size", adj_c.shape[0], n_u)
    _check_dims("feature similarity size", adj_f.shape[0], n_f)
    _check_dims("word similarity size", adj_w.shape[0], n_w)

    if init is not None:
        u, f, w = (np.array(m, dtype=np.float64) for m in init)
    else:
        rng = np.random.default_rng(cfg.seed)
        u = _positive_init(rng, (n_u, cfg.k))
        f = _positive_init(rng, (n_f, cfg.k))
        w = _positive_init(rng, (n_w, cfg.k))
    eps = cfg.epsilon_guard

    def obj():
        fs = FactorSet(U=u, W=w, H=f)
        if feature_kind == "hashtag":
            return objective(fs, cfg, x_uw, adj_c, adj_w, x_uh=x_uf, h_sim=adj_f)
        fs = FactorSet(U=u, W=w, D=f)
        return objective(fs, cfg, x_uw, adj_c, adj_w, x_ud=x_uf, d_sim=adj_f)

    trace = [obj()]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        u = _step(
            u,
            x_uw @ w + x_uf @ f + cfg.alpha * (adj_c @ u),
            u @ (w.T @ w + f.T @ f) + cfg.alpha * (deg_c[:, None] * u),
            eps, "U", it,
        )
        utu = u.T @ u
        f = _step(
            f,
            x_uf.T @ u + weight * (adj_f @ f),
            f @ utu + weight * (deg_f[:, None] * f),
            eps, "F", it,
        )
        w = _step(
            w,
            x_uw.T @ u + cfg.beta * (adj_w @ w),
            w @ utu + cfg.beta * (deg_w[:, None] * w),
            eps, "W", it,
        )
        trace.append(obj())
        if abs(trace[-1] - trace[-2]) / max(trace[-2], eps) < cfg.rel_tol:
            converged = True
            break
    if feature_kind == "hashtag":
        return FactorSet(U=u, W=w, H=f, objective_trace=trace, iterations=it, converged=converged)
    return FactorSet(U=u, W=w, D=f, objective_trace=trace, iterations=it, converged=converged)


def dual_nmf(x_uw, c, w_sim, cfg: SolverConfig, init=None) -> FactorSet:
    """Two-factor variant: user-word matrix with connectivity and word-similarity penalties."""
    x_uw = _as_sparse(x_uw)
    n_u, n_w = x_uw.shape
    deg_c, adj_c = _lap_parts(c)
    deg_w, adj_w = _lap_parts(w_sim)
    _check_dims("connectivity size", adj_c.shape[0], n_u)
    _check_dims("word similarity size", adj_w.shape[0], n_w)

    if init is not None:
        u, w = (np.array(m, dtype=np.float64) for m in init)
    else:
        rng = np.random.default_rng(cfg.seed)
        u = _positive_init(rng, (n_u, cfg.k))
        w = _positive_init(rng, (n_w, cfg.k))
    eps = cfg.epsilon_guard

    def obj():
        return objective(FactorSet(U=u, W=w), cfg, x_uw, adj_c, adj_w)

    trace = [obj()]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        u = _step(
            u,
            x_uw @ w + cfg.alpha * (adj_c @ u),
            u @ (w.T @ w) + cfg.alpha * (deg_c[:, None] * u),
            eps, "U", it,
        )
        w = _step(
            w,
            x_uw.T @ u + cfg.beta * (adj_w @ w),
            w @ (u.T @ u) + cfg.beta * (deg_w[:, None] * w),
            eps, "W", it,
        )
        trace.append(obj())
        if abs(trace[-1] - trace[-2]) / max(trace[-2], eps) < cfg.rel_tol:
            converged = True
            break
    return FactorSet(U=u, W=w, objective_trace=trace, iterations=it, converged=converged)


def assign(u: np.ndarray) -> Partition:
    """Per-row argmax community assignment; ties go to the lowest index."""
    if u.ndim != 2:
        raise ValueError("U must be 2-d")
    assignment = np.argmax(u, axis=1)
    zero_rows = int(np.sum(~np.any(u > 0, axis=1)))
    if zero_rows:
        logger.warning("%d all-zero rows assigned to community 0", zero_rows)
    return Partition(assignment=assignment, k=u.shape[1], zero_rows=zero_rows)


def save_factors(fs: FactorSet, out_dir: str, cfg: SolverConfig | None = None) -> None:
    """One text matrix file per factor, the objective trace as CSV, and a JSON manifest."""
    os.makedirs(out_dir, exist_ok=True)
    for name in ("U", "W", "H", "D"):
        mat = getattr(fs, name)
        if mat is None:
            continue
        np.savetxt(
            os.path.join(out_dir, f"{name}.txt"),
            mat,
            header=f"shape {mat.shape[0]} {mat.shape[1]}",
        )
    with open(os.path.join(out_dir, "objective_trace.csv"), "w", encoding="utf-8") as fh:
        fh.write("iteration,objective\n")
        for i, val in enumerate(fs.objective_trace):
            fh.write(f"{i},{val!r}\n")
    manifest = {
        "config": asdict(cfg) if cfg is not None else None,
        "iterations": fs.iterations,
        "converged": fs.converged,
        "factors": [n for n in ("U", "W", "H", "D") if getattr(fs, n) is not None],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def load_factors(out_dir: str) -> FactorSet:
    with open(os.path.join(out_dir, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    mats = {}
    for name in manifest["factors"]:
        mats[name] = np.loadtxt(os.path.join(out_dir, f"{name}.txt"), ndmin=2)
    trace = []
    with open(os.path.join(out_dir, "objective_trace.csv"), encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            trace.append(float(line.split(",")[1]))
    return FactorSet(
        U=mats["U"],
        W=mats["W"],
        H=mats.get("H"),
        D=mats.get("D"),
        objective_trace=trace,
        iterations=manifest["iterations"],
        converged=manifest["converged"],
    )
