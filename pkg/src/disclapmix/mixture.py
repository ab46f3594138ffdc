"""Mixtures of multivariate, marginally independent, discrete Laplace distributions.

A haplotype ``x`` (r integer alleles) has probability

    sum_j tau_j * prod_k f(x_k; p_jk, y_jk)

where cluster ``j`` has central haplotype ``y_j`` and the dispersions
follow the additive log structure ``log p_jk = omega_j + lambda_k``.
``omega[0]`` is pinned to zero for identifiability.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import numpy.typing as npt

from . import kernels
from .disclap import dispersion_from_mad, lower_median

logger = logging.getLogger(__name__)

P_MIN = 1e-5
P_MAX = 1.0 - 1e-9


class FitError(RuntimeError):
    """EM could not produce a model for the requested cluster count."""


class DispersionClampWarning(RuntimeWarning):
    """A fitted dispersion sits on the ``p_min`` floor (degenerate locus)."""


def default_locus_names(r: int) -> tuple[str, ...]:
    return tuple(f"Locus{k + 1}" for k in range(r))


@dataclass(frozen=True, eq=False)
class MixtureModel:
    tau: npt.NDArray[np.float64]
    centers: npt.NDArray[np.int64]
    omega: npt.NDArray[np.float64]
    lambda_: npt.NDArray[np.float64]
    locus_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        tau = np.asarray(self.tau, dtype=np.float64).ravel()
        centers = np.atleast_2d(np.asarray(self.centers))
        omega = np.asarray(self.omega, dtype=np.float64).ravel()
        lam = np.asarray(self.lambda_, dtype=np.float64).ravel()
        c, r = centers.shape
        if tau.size != c or omega.size != c or lam.size != r:
            raise ValueError(
                f"inconsistent shapes: tau {tau.size}, centers {centers.shape}, "
                f"omega {omega.size}, lambda {lam.size}"
            )
        if not np.array_equal(centers, np.round(centers)):
            raise ValueError("centers must be integers")
        if np.any(tau <= 0) or abs(tau.sum() - 1.0) > 1e-9:
            raise ValueError("tau must be positive and sum to one")
        if omega[0] != 0.0:
            raise ValueError("omega[0] must be exactly 0 (identifiability pin)")
        eta = omega[:, None] + lam[None, :]
        if not np.all(np.isfinite(eta)) or np.any(eta >= 0.0):
            raise ValueError("every dispersion exp(omega_j + lambda_k) must lie in (0, 1)")
        names = tuple(self.locus_names) if self.locus_names else default_locus_names(r)
        if len(names) != r:
            raise ValueError(f"expected {r} locus names, got {len(names)}")
        object.__setattr__(self, "tau", tau / tau.sum())
        object.__setattr__(self, "centers", centers.astype(np.int64))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "lambda_", lam)
        object.__setattr__(self, "locus_names", names)

    @classmethod
    def from_dispersions(cls, tau, centers, dispersions, locus_names=()) -> "MixtureModel":
        """Build a model from a c x r dispersion matrix that has the additive log form."""
        logp = np.log(np.atleast_2d(np.asarray(dispersions, dtype=np.float64)))
        lam = logp[0].copy()
        omega = logp[:, 0] - lam[0]
        omega[0] = 0.0
        if not np.allclose(omega[:, None] + lam[None, :], logp, rtol=0, atol=1e-12):
            raise ValueError("dispersions do not satisfy log p_jk = omega_j + lambda_k")
        return cls(tau, centers, omega, lam, locus_names)

    @property
    def c(self) -> int:
        return self.centers.shape[0]

    @property
    def r(self) -> int:
        return self.centers.shape[1]

    @property
    def log_dispersions(self) -> npt.NDArray[np.float64]:
        return self.omega[:, None] + self.lambda_[None, :]

    @property
    def dispersions(self) -> npt.NDArray[np.float64]:
        return np.exp(self.log_dispersions)

    def canonical(self) -> "MixtureModel":
        """Same model with clusters sorted lexicographically by center, omega re-pinned."""
        order = np.lexsort(self.centers.T[::-1])
        omega = self.omega[order]
        shift = omega[0]
        return replace(
            self,
            tau=self.tau[order],
            centers=self.centers[order],
            omega=omega - shift,
            lambda_=self.lambda_ + shift,
        )

    def log_density(self, xs) -> npt.NDArray[np.float64]:
        xs = _as_matrix(xs, self.r)
        if xs.shape[0] == 0:
            return np.empty(0)
        return kernels.log_density(
            xs, self.centers, np.ascontiguousarray(self.log_dispersions), np.log(self.tau)
        )

    def predict(self, xs) -> npt.NDArray[np.float64]:
        return np.exp(self.log_density(xs))


def _as_matrix(xs, r: int) -> npt.NDArray[np.int64]:
    a = np.asarray(xs)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(0, r)
    a = np.atleast_2d(a)
    if a.shape[1] != r:
        raise ValueError(f"haplotypes have {a.shape[1]} loci, model has {r}")
    if a.size and not np.array_equal(a, np.round(a)):
        raise ValueError("haplotypes must be integer valued")
    return np.ascontiguousarray(a, dtype=np.int64)


def haplotype_log_density(model: MixtureModel, x) -> float:
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("expected a single haplotype vector")
    return float(model.log_density(x[None, :])[0])


def predict(model: MixtureModel, xs) -> npt.NDArray[np.float64]:
    return model.predict(xs)


# ---------------------------------------------------------------- fitting


@dataclass(frozen=True)
class FitOptions:
    tol: float = 1e-8
    max_iter: int = 1000
    # seeded k-medoids++ starts tried in addition to the maximin start (c > 1 only)
    restarts: int = 5
    seed: int = 0
    p_min: float = P_MIN
    newton_max_iter: int = 50
    newton_tol: float = 1e-10
    max_reseeds: int = 3


@dataclass
class FitReport:
    loglik_trace: list[float]
    iterations: int
    converged: bool
    bic: float
    n_params: int
    n_obs: int
    reseeds: int = 0
    clamped: bool = False

    @property
    def loglik(self) -> float:
        return self.loglik_trace[-1]


def n_parameters(c: int, r: int) -> int:
    """Free parameters: c-1 weights, c*r integer centers, c-1 cluster effects, r locus effects."""
    return (c - 1) + c * r + (c - 1) + r


def bic(loglik: float, c: int, r: int, n: int) -> float:
    return -2.0 * loglik + n_parameters(c, r) * math.log(n)


def _check_db(db) -> npt.NDArray[np.int64]:
    a = np.asarray(db)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise FitError("dataset must be a non-empty n x r matrix")
    if not np.all(np.isfinite(a)) or not np.array_equal(a, np.round(a)):
        raise FitError("dataset entries must be finite integers")
    return np.ascontiguousarray(a, dtype=np.int64)


def _column_abs_sums(col: npt.NDArray[np.int64], values: npt.NDArray[np.int64]) -> npt.NDArray[np.int64]:
    """sum_i |col_i - v| for every v in ``values``."""
    s = np.sort(col)
    prefix = np.concatenate(([0], np.cumsum(s)))
    pos = np.searchsorted(s, values, side="right")
    below = values * pos - prefix[pos]
    above = (prefix[-1] - prefix[pos]) - values * (s.size - pos)
    return below + above


def _distinct_rows(db):
    """Distinct rows in order of first occurrence, with their multiplicities."""
    uniq, first, counts = np.unique(db, axis=0, return_index=True, return_counts=True)
    order = np.argsort(first, kind="stable")
    return uniq[order], first[order], counts[order]


def init_centers(db, c: int, seed: int | None = None) -> npt.NDArray[np.int64]:
    """Maximin L1 medoid seeding.

    First medoid minimises the total L1 distance to all rows; each further
    medoid maximises the L1 distance to its nearest chosen medoid.  Ties go to
    the lowest row index.  ``seed`` is unused here and kept for the
    random-restart variant (:func:`_random_centers`).
    """
    db = _check_db(db)
    if c < 1:
        raise ValueError("need at least one cluster")
    rows, _, _ = _distinct_rows(db)
    if rows.shape[0] < c:
        raise FitError(f"only {rows.shape[0]} distinct haplotypes, cannot seed {c} clusters")
    total = np.zeros(rows.shape[0], dtype=np.int64)
    for k in range(db.shape[1]):
        total += _column_abs_sums(db[:, k], rows[:, k])
    chosen = [int(np.argmin(total))]
    nearest = np.abs(rows - rows[chosen[0]]).sum(axis=1)
    while len(chosen) < c:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.abs(rows - rows[nxt]).sum(axis=1))
    return rows[chosen].copy()


def _random_centers(db, c: int, rng: np.random.Generator) -> npt.NDArray[np.int64]:
    """k-medoids++ style seeding: sample rows with probability proportional to L1 gap."""
    rows, _, counts = _distinct_rows(db)
    if rows.shape[0] < c:
        raise FitError(f"only {rows.shape[0]} distinct haplotypes, cannot seed {c} clusters")
    w = counts.astype(float)
    chosen = [int(rng.choice(rows.shape[0], p=w / w.sum()))]
    nearest = np.abs(rows - rows[chosen[0]]).sum(axis=1)
    while len(chosen) < c:
        prob = w * nearest
        nxt = int(rng.choice(rows.shape[0], p=prob / prob.sum()))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.abs(rows - rows[nxt]).sum(axis=1))
    return rows[chosen].copy()


class _DispersionProblem:
    """Expected complete-data objective in (omega_2..omega_c, lambda_1..lambda_r).

    Cell (j, k) contributes W_j * log((1 - p)/(1 + p)) + D_jk * log p with
    log p = omega_j + lambda_k; W_j is the cluster mass and D_jk the
    responsibility-weighted absolute deviation.  Strictly concave whenever
    every W_j > 0.
    """

    def __init__(self, W, D):
        self.W = W
        self.D = D
        c, r = D.shape
        self.c, self.r = c, r
        J = np.zeros((c * r, c - 1 + r))
        for j in range(c):
            for k in range(r):
                if j > 0:
                    J[j * r + k, j - 1] = 1.0
                J[j * r + k, c - 1 + k] = 1.0
        self.J = J

    def eta(self, theta):
        return (self.J @ theta).reshape(self.c, self.r)

    def value(self, eta):
        p = np.exp(eta)
        return float(np.sum(self.W[:, None] * (np.log1p(-p) - np.log1p(p)) + self.D * eta))

    def derivatives(self, eta):
        p = np.exp(eta)
        q = 1.0 - p * p
        g = self.D - self.W[:, None] * 2.0 * p / q
        h = -self.W[:, None] * 2.0 * p * (1.0 + p * p) / (q * q)
        grad = self.J.T @ g.ravel()
        hess = self.J.T @ (h.ravel()[:, None] * self.J)
        return grad, hess


def fit_dispersions(W, D, omega, lam, p_min=P_MIN, max_iter=50, tol=1e-10):
    """Maximise the dispersion objective subject to p_min <= p_jk < 1 - 1e-9.

    Damped Newton with an active set for the lower bound.  Starts from
    ``(omega, lam)``, which must be feasible; every accepted step increases
    the objective.  Returns ``(omega, lam, at_floor)``.
    """
    prob = _DispersionProblem(np.asarray(W, float), np.asarray(D, float))
    c, r = prob.c, prob.r
    lb = math.log(p_min)
    ub = math.log(P_MAX)
    omega = np.asarray(omega, float)
    # re-pin omega[0] = 0 without moving the starting point
    theta = np.concatenate((omega[1:] - omega[0], np.asarray(lam, float) + omega[0]))
    active: list[int] = []
    steps = 0
    for _ in range(max_iter + c * r + 1):
        eta = prob.eta(theta)
        grad, hess = prob.derivatives(eta)
        m = len(active)
        if m:
            A = prob.J[active]
            kkt = np.zeros((hess.shape[0] + m, hess.shape[0] + m))
            kkt[: hess.shape[0], : hess.shape[0]] = hess
            kkt[: hess.shape[0], hess.shape[0]:] = A.T
            kkt[hess.shape[0]:, : hess.shape[0]] = A
            sol = np.linalg.solve(kkt, np.concatenate((-grad, np.zeros(m))))
            delta, nu = sol[: hess.shape[0]], sol[hess.shape[0]:]
        else:
            delta = np.linalg.solve(hess, -grad)
            nu = np.empty(0)
        reduced = -hess @ delta
        if np.max(np.abs(reduced)) < tol or steps >= max_iter:
            if m and nu.min() < 0 and steps < max_iter:
                active.pop(int(np.argmin(nu)))
                continue
            break
        d_eta = (prob.J @ delta).reshape(c, r)
        t, blocking = 1.0, None
        flat_eta, flat_d = eta.ravel(), d_eta.ravel()
        # cells whose constraint row lies in the span of the active rows cannot move
        negligible = 1e-12 * (1.0 + np.max(np.abs(flat_d)))
        for i in np.flatnonzero(flat_d < -negligible):
            if i in active:
                continue
            ti = (lb - flat_eta[i]) / flat_d[i]
            if ti < t and _independent(prob.J, active, int(i)):
                t, blocking = max(ti, 0.0), int(i)
        up = flat_d > 0
        if np.any(up):
            t_up = np.min((ub - flat_eta[up]) / flat_d[up])
            if t_up <= t:
                t, blocking = 0.5 * t_up, None
        if blocking is not None and t == 0.0:
            active.append(blocking)
            continue
        f0 = prob.value(eta)
        slope = float(grad @ delta)
        steps += 1
        if slope <= 1e-13 * (1.0 + abs(f0)) and blocking is None and t == 1.0:
            # quadratic-convergence regime: take the full step and stop
            theta = theta + delta
            break
        while t > 1e-16:
            cand = theta + t * delta
            if prob.value(prob.eta(cand)) >= f0 + 1e-4 * t * slope:
                theta = cand
                break
            t *= 0.5
            blocking = None
        else:
            break
        if blocking is not None:
            active.append(blocking)
    omega_out = np.concatenate(([0.0], theta[: c - 1]))
    lam_out = theta[c - 1:].copy()
    eta = omega_out[:, None] + lam_out[None, :]
    at_floor = bool(np.any(eta <= lb + 1e-9))
    return omega_out, lam_out, at_floor


def _independent(J, active, i):
    if not active:
        return True
    rows = J[active + [i]]
    return np.linalg.matrix_rank(rows) == len(active) + 1


class _EMState:
    def __init__(self, db, opts: FitOptions):
        self.db = db
        self.n, self.r = db.shape
        self.opts = opts
        self.order = np.ascontiguousarray(np.argsort(db, axis=0, kind="stable"), dtype=np.int64)

    def initial_resp(self, centers):
        dist = np.abs(self.db[:, None, :] - centers[None, :, :]).sum(axis=2)
        lab = np.argmin(dist, axis=1)
        resp = np.zeros((self.n, centers.shape[0]))
        resp[np.arange(self.n), lab] = 1.0
        return resp

    def initial_effects(self, c):
        lam = np.empty(self.r)
        for k in range(self.r):
            col = self.db[:, k]
            mu = float(np.mean(np.abs(col - lower_median(col))))
            lam[k] = math.log(min(max(dispersion_from_mad(mu), self.opts.p_min), 0.9))
        return np.zeros(c), lam

    def m_step(self, resp, omega, lam):
        W = resp.sum(axis=0)
        tau = W / W.sum()
        centers = kernels.weighted_medians(self.db, self.order, resp)
        D = kernels.abs_dev_sums(self.db, centers, resp)
        omega, lam, at_floor = fit_dispersions(
            W, D, omega, lam, self.opts.p_min, self.opts.newton_max_iter, self.opts.newton_tol
        )
        return tau, centers, omega, lam, at_floor

    def run(self, centers0):
        n, opts = self.n, self.opts
        c = centers0.shape[0]
        resp = self.initial_resp(centers0)
        omega, lam = self.initial_effects(c)
        tau, centers, omega, lam, at_floor = self.m_step(resp, omega, lam)
        trace: list[float] = []
        converged = False
        reseeds = 0
        it = 0
        while it < opts.max_iter:
            it += 1
            log_p = np.ascontiguousarray(omega[:, None] + lam[None, :])
            resp, row_ll = kernels.e_step(self.db, centers, log_p, np.log(tau))
            ll = float(row_ll.sum())
            if not math.isfinite(ll):
                raise FitError(f"non-finite log-likelihood at iteration {it} (c={c})")
            trace.append(ll)
            if len(trace) > 1 and abs(ll - trace[-2]) <= opts.tol * max(abs(ll), 1e-300):
                converged = True
                break
            if it == opts.max_iter:
                break
            empty = np.flatnonzero(resp.sum(axis=0) < 1e-8 * n)
            if empty.size:
                if reseeds >= opts.max_reseeds:
                    raise FitError(f"cluster {int(empty[0]) + 1} emptied more than {opts.max_reseeds} times (c={c})")
                reseeds += 1
                logger.info("re-seeding %d empty cluster(s) at iteration %d", empty.size, it)
                worst = np.argsort(row_ll, kind="stable")
                centers = centers.copy()
                for slot, j in enumerate(empty):
                    centers[j] = self.db[worst[slot]]
                # restart from a hard assignment to the new centers; the trace restarts too
                resp = self.initial_resp(centers)
                trace.clear()
            tau, centers, omega, lam, at_floor = self.m_step(resp, omega, lam)
        model = MixtureModel(tau, centers, omega, lam)
        n_par = n_parameters(c, self.r)
        report = FitReport(
            loglik_trace=trace,
            iterations=it,
            converged=converged,
            bic=bic(trace[-1], c, self.r, n),
            n_params=n_par,
            n_obs=n,
            reseeds=reseeds,
            clamped=bool(np.any(model.log_dispersions <= math.log(opts.p_min) + 1e-9)),
        )
        return model, resp, report


def fit(db, clusters: int, opts: FitOptions | None = None, locus_names: Sequence[str] = ()):
    """Fit a ``clusters``-component mixture by EM.

    Returns ``(model, responsibilities, report)``.  With ``opts.restarts > 0``
    additional runs start from seeded random medoids and the run with the
    highest final log-likelihood is kept.
    """
    opts = opts or FitOptions()
    db = _check_db(db)
    n, r = db.shape
    if clusters < 1:
        raise FitError("cluster count must be at least 1")
    if clusters > n:
        raise FitError(f"cannot fit {clusters} clusters to {n} observations")
    state = _EMState(db, opts)
    starts = [init_centers(db, clusters)]
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.restarts if clusters > 1 else 0):
        starts.append(_random_centers(db, clusters, rng))
    best = None
    for centers0 in starts:
        out = state.run(centers0)
        if best is None or out[2].loglik > best[2].loglik:
            best = out
    model, resp, report = best
    if locus_names:
        model = replace(model, locus_names=tuple(locus_names))
    if report.clamped:
        warnings.warn(
            f"dispersion clamped at p_min={opts.p_min:g} (c={clusters})",
            DispersionClampWarning,
            stacklevel=2,
        )
    return model, resp, report


def fit_sweep(db, c_range, opts: FitOptions | None = None, locus_names: Sequence[str] = (), n_jobs: int = 1):
    """Independent fits for every cluster count in ``c_range``.

    ``c_range`` is an iterable of counts or an inclusive ``(lo, hi)`` pair.
    Returns ``(fits, best)`` where ``fits`` is a list of ``(model, report)``
    and ``best`` indexes the minimal BIC (lowest c on ties).
    """
    if isinstance(c_range, tuple) and len(c_range) == 2:
        counts = list(range(c_range[0], c_range[1] + 1))
    else:
        counts = list(c_range)
    if not counts:
        raise ValueError("empty cluster range")
    db = _check_db(db)
    if max(counts) > db.shape[0]:
        raise FitError(f"cannot fit {max(counts)} clusters to {db.shape[0]} observations")

    def one(c):
        model, _, report = fit(db, c, opts, locus_names)
        return model, report

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            fits = list(pool.map(one, counts))
    else:
        fits = [one(c) for c in counts]
    bics = [rep.bic for _, rep in fits]
    return fits, int(np.argmin(bics))
