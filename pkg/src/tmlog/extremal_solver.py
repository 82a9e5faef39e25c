"""Projected gradient ascent for Phi over the discrete fractional unit ball."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidArgument, StallError, UndefinedMultiplier, UnsupportedInput
from .fractional_calculus import StiffnessForm, mass_matrix, stiffness_matrix
from .function_space import Grid1D, SampledFunction, schwarz_rearrange
from .log_functionals import kernel_matrices, phi_report


@dataclass
class MaximizerState:
    coefficients: np.ndarray
    phi: float
    constraint_value: float
    kkt_residual: float
    theta: float
    iterations: int
    converged: bool
    history: List[Tuple[int, float, float]] = field(default_factory=list)
    nodes: Optional[np.ndarray] = None
    full_norm: bool = False
    symmetrizations: List[Tuple[int, float, float]] = field(default_factory=list)

    def function(self):
        return SampledFunction(Grid1D(self.nodes, True), self.coefficients)

    def to_dict(self):
        d = asdict(self)
        d["coefficients"] = [float(c) for c in self.coefficients]
        d["nodes"] = [float(x) for x in self.nodes]
        d["history"] = [list(h) for h in self.history]
        d["symmetrizations"] = [list(h) for h in self.symmetrizations]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["coefficients"] = np.asarray(d["coefficients"], float)
        d["nodes"] = np.asarray(d["nodes"], float)
        d["history"] = [tuple(h) for h in d.get("history", [])]
        d["symmetrizations"] = [tuple(h) for h in d.get("symmetrizations", [])]
        return cls(**d)


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 2000
    tol: float = 1e-3
    symmetrize_every: int = 10
    seed: int = 7
    perturbation: float = 0.05
    armijo: float = 1e-4
    max_halvings: int = 40
    refine: int = 4


def interpolation_matrix(coarse, fine):
    """P with (P c)_j = u(x_j) for the piecewise-linear u with nodal values c."""
    eye = np.eye(coarse.size)
    return np.stack([np.interp(fine.nodes, coarse.nodes, e) for e in eye], axis=1)


class _Problem:
    """Discrete Phi(c) = v^T K v with v = G(P c) and the quadratic constraint c^T B c."""

    def __init__(self, grid, G, refine=4, full_norm=False):
        if not G.has_derivative:
            raise UnsupportedInput("the ascent needs a differentiable growth model")
        if full_norm and G(0.0) != 0.0:
            raise InvalidArgument("the whole-line variant needs G(0) = 0")
        if not full_norm:
            a, b = grid.hull
            if a < -1 - 1e-12 or b > 1 + 1e-12:
                raise InvalidArgument("the interval problem lives on a grid inside [-1, 1]")
        self.grid = grid
        self.G = G
        self.fine = grid.refined(refine)
        self.P = interpolation_matrix(grid, self.fine)
        self.K = kernel_matrices(self.fine)[0]
        self.Q = stiffness_matrix(grid)
        B = self.Q.entries / (2.0 * math.pi)
        if full_norm:
            B = B + mass_matrix(grid)
        self.B = B
        self.inner = slice(1, grid.size - 1)
        Bi = B[self.inner, self.inner]
        self._chol = np.linalg.cholesky(Bi)

    def phi(self, c):
        v = self.G(self.P @ c)
        return float(v @ self.K @ v)

    def grad(self, c):
        v, g = self.G.eval(self.P @ c, want_derivative=True)
        return 2.0 * self.P.T @ ((self.K @ v) * g)

    def con(self, c):
        return float(c @ self.B @ c)

    def solve_B(self, r):
        out = np.zeros_like(r)
        L = self._chol
        out[self.inner] = np.linalg.solve(L.T, np.linalg.solve(L, r[self.inner]))
        return out

    def multiplier(self, c, gphi=None):
        gphi = self.grad(c) if gphi is None else gphi
        gcon = 2.0 * self.B @ c
        denom = float(gcon[self.inner] @ c[self.inner])
        theta = float(gphi[self.inner] @ c[self.inner]) / denom
        r = gphi[self.inner] - theta * gcon[self.inner]
        nrm = np.linalg.norm(gphi[self.inner])
        kkt = float(np.linalg.norm(r) / nrm) if nrm > 0 else math.inf
        return theta, kkt

    def to_sphere(self, c):
        return c / math.sqrt(self.con(c))


def project_to_ball(c, Q, full_norm=False, grid=None):
    """Radially rescale c onto {c^T B c <= 1}; feasible input is returned unchanged."""
    c = np.asarray(c, dtype=float)
    entries = Q.entries if isinstance(Q, StiffnessForm) else np.asarray(Q)
    B = entries / (2.0 * math.pi)
    if full_norm:
        B = B + mass_matrix(grid if grid is not None else Q.grid)
    val = float(c @ B @ c)
    if val > 1.0:
        return c / math.sqrt(val)
    return c.copy()


def constraint_value(c, Q, full_norm=False):
    B = Q.entries / (2.0 * math.pi)
    if full_norm:
        B = B + mass_matrix(Q.grid)
    return float(c @ B @ c)


def phi_gradient(u, G, refine=4):
    """Nodal gradient of phi_report(u, G).phi with respect to the nodal values of u."""
    if not G.has_derivative:
        raise UnsupportedInput("growth model has no derivative")
    fine = u.grid.refined(refine)
    P = interpolation_matrix(u.grid, fine)
    K = kernel_matrices(fine)[0]
    v, g = G.eval(P @ u.values, want_derivative=True)
    return 2.0 * P.T @ ((K @ v) * g)


def _symmetrize(c, grid):
    u = SampledFunction(grid, np.abs(c))
    s = schwarz_rearrange(u, grid).values.copy()
    s[0] = s[-1] = 0.0
    # mirror exactly so rounding in the resample cannot break evenness
    return 0.5 * (s + s[::-1])


def initial_guess(prob, opts):
    x = prob.grid.nodes
    a, b = prob.grid.hull
    half = 0.5 * (b - a)
    c = np.maximum(0.0, 1.0 - np.abs(x) / half)
    if opts.perturbation > 0:
        rng = np.random.default_rng(opts.seed)
        c = c * (1.0 + opts.perturbation * rng.uniform(-1.0, 1.0, x.size))
    c[0] = c[-1] = 0.0
    return c * math.sqrt(0.9 / prob.con(c))


def maximize(G, grid, opts=SolverOptions(), full_norm=False, callback=None):
    """Maximise Phi(u) subject to |(-Delta)^{1/4} u|_2^2 (+ |u|_2^2 if full_norm) <= 1.

    Each step moves toward y, the point of the unit constraint sphere in the
    direction of B^{-1} grad Phi, and rescales onto the sphere when that does
    not lower Phi. Steps are halved until the Armijo condition holds.
    """
    if opts.symmetrize_every < 0:
        raise InvalidArgument("symmetrize_every must be >= 0")
    prob = _Problem(grid, G, opts.refine, full_norm)
    c = initial_guess(prob, opts)
    phi = prob.phi(c)
    con = prob.con(c)
    history = [(0, phi, con)]
    sym_log = []
    state = None
    converged = False
    it = 0

    def make_state(conv):
        theta, kkt = prob.multiplier(c)
        return MaximizerState(c.copy(), phi, con, kkt, theta, it, conv, list(history),
                              grid.nodes.copy(), full_norm, list(sym_log))

    def symmetrize():
        nonlocal c, phi, con
        new = _symmetrize(c, grid)
        if prob.con(new) > 1.0:
            new = prob.to_sphere(new)
        fine_old = SampledFunction(prob.fine, G(prob.P @ c))
        fine_new = SampledFunction(prob.fine, G(prob.P @ new))
        Kp = kernel_matrices(prob.fine)[1]
        dplus = float(fine_new.values @ Kp @ fine_new.values - fine_old.values @ Kp @ fine_old.values)
        dcon = prob.con(new) - con
        sym_log.append((it, dplus, dcon))
        c = new
        phi = prob.phi(c)
        con = prob.con(c)

    while it < opts.max_iter:
        if opts.symmetrize_every and it % opts.symmetrize_every == 0:
            symmetrize()
        gphi = prob.grad(c)
        theta, kkt = prob.multiplier(c, gphi)
        if kkt <= opts.tol and abs(con - 1.0) <= 1e-10:
            if opts.symmetrize_every:
                symmetrize()
                theta, kkt = prob.multiplier(c)
            if kkt <= opts.tol:
                converged = True
                break
        ystar = prob.solve_B(gphi)
        y = prob.to_sphere(ystar)
        d = y - c
        slope = float(gphi @ d)
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = c + t * d
            cand = prob.to_sphere(trial)
            p_trial, p_cand = prob.phi(trial), prob.phi(cand)
            if p_cand >= p_trial:
                trial, p_trial = cand, p_cand
            elif prob.con(trial) > 1.0:
                trial, p_trial = cand, p_cand
            if p_trial >= phi + opts.armijo * t * slope and p_trial >= phi:
                break
            t *= 0.5
        else:
            it += 1
            raise StallError("line search failed after %d halvings" % opts.max_halvings,
                             make_state(False))
        it += 1
        c, phi, con = trial, p_trial, prob.con(trial)
        history.append((it, phi, con))
        if callback is not None:
            callback(it, phi, con)
    return make_state(converged)


def theta_estimate(state, G, refine=4):
    """Lagrange multiplier <grad Phi, c> / <grad con, c> and the KKT residual at ``state``.

    Raises UndefinedMultiplier when the constraint is not active.
    """
    if abs(state.constraint_value - 1.0) > 1e-6:
        raise UndefinedMultiplier(
            f"constraint inactive (value {state.constraint_value!r}); no multiplier")
    grid = Grid1D(state.nodes, True)
    prob = _Problem(grid, G, refine, state.full_norm)
    return prob.multiplier(np.asarray(state.coefficients, float))
