"""Multi-start projected subgradient ascent for max-min information objectives.

Each restart climbs the penalized objective min_k f_k + lambda * min(0, slack)
by block-coordinate projected steps (one free factor at a time). At a kink
where no single branch gradient improves, the minimum-norm convex
combination of the near-active branch gradients is tried before giving up.
The climb result is then polished with SLSQP on the epigraph form
max t s.t. f_k >= t, slack >= 0, rows on the simplex, and the polished
point replaces it only when it is feasible and no worse.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import BudgetExceededError, DomainError
from .objective import FactoredObjective
from .rates import SLACK_TOL, RatePoint, inner_lp, mac_bounds_from_joint, mac_objective

GRID_POINT_LIMIT = 200_000
GRID_MAX_FREE = 12


@dataclass
class OptOptions:
    restarts: int = 64
    grid_levels: int = 0
    seed: int = 0
    tol: float = 1e-9
    patience: int = 50
    max_iter: int = 100
    step0: float = 0.25
    step_floor: float = 1e-6
    penalty: float = 10.0
    threads: int = 1
    polish: bool = True


@dataclass
class OptReport:
    best_value: float
    argmax: dict
    decision: object
    restarts: int
    trajectories: list
    feasibility_margin: float
    feasible: bool
    grid_value: Optional[float] = None
    grid_points: int = 0
    branch_values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        dec = self.decision
        if hasattr(dec, "to_dict"):
            dec = dec.to_dict()
        elif isinstance(dec, dict):
            dec = {k: np.asarray(v).tolist() for k, v in dec.items()}
        return {
            "best_value": self.best_value,
            "feasible": self.feasible,
            "feasibility_margin": self.feasibility_margin,
            "branch_values": self.branch_values,
            "restarts": self.restarts,
            "grid_value": self.grid_value,
            "grid_points": self.grid_points,
            "argmax": {k: np.asarray(v).tolist() for k, v in self.argmax.items()},
            "decision": dec,
            "trajectories": self.trajectories,
        }


def project_rows(x: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    n = x.shape[-1]
    u = -np.sort(-x, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(x - theta, 0.0)


def _project(obj: FactoredObjective, params: dict) -> dict:
    out = {}
    for f in obj.free:
        out[f.name] = project_rows(params[f.name].reshape(f.rows, f.width)).reshape(f.shape)
    return out


class _Problem:
    """Penalized scalar objective plus a subgradient oracle."""

    def __init__(self, obj: FactoredObjective, penalty: float):
        self.obj = obj
        self.penalty = penalty

    def score(self, params) -> tuple[float, np.ndarray, float]:
        vals, slack = self.obj.evaluate(params)
        f = float(np.min(vals))
        if np.isfinite(slack) and slack < 0:
            f += self.penalty * slack
        return f, vals, slack

    def _grads(self, params, exprs):
        probs = self.obj.joint_probs(params)
        return [self.obj.gradient(e, params, probs) for e in exprs]

    def direction(self, params, vals, slack, kink: bool) -> dict:
        lo = float(np.min(vals))
        if kink:
            active = [i for i, v in enumerate(vals) if v <= lo + 1e-6]
        else:
            active = [i for i, v in enumerate(vals) if v <= lo + 1e-12]
            pref = self.obj.preferred
            if pref is not None and pref in active:
                active = [pref]
            else:
                active = active[:1]
        grads = self._grads(params, [self.obj.branches[i] for i in active])
        g = grads[0] if len(grads) == 1 else _min_norm(self.obj, grads)
        if np.isfinite(slack) and slack < 0:
            gs = self.obj.gradient(self.obj.slack, params)
            g = {k: g[k] + self.penalty * gs[k] for k in g}
        return _tangent(self.obj, g, params)


def _tangent(obj, g, params=None):
    """Row-wise projection of g onto the simplex face containing params.

    Coordinates sitting at zero whose gradient points out of the simplex are
    frozen; otherwise their (large) log-gradients would dominate the step
    normalization while the projection discards them anyway.
    """
    out = {}
    for f in obj.free:
        r = g[f.name].reshape(f.rows, f.width)
        free = np.ones_like(r, dtype=bool)
        if params is not None:
            at_zero = params[f.name].reshape(f.rows, f.width) <= 1e-15
            for _ in range(f.width):
                mean = (r * free).sum(axis=1, keepdims=True) / np.maximum(free.sum(axis=1, keepdims=True), 1)
                new = ~(at_zero & (r <= mean))
                if np.array_equal(new, free):
                    break
                free = new
        mean = (r * free).sum(axis=1, keepdims=True) / np.maximum(free.sum(axis=1, keepdims=True), 1)
        out[f.name] = np.where(free, r - mean, 0.0).reshape(f.shape)
    return out


def _flat(obj, g):
    return np.concatenate([g[f.name].reshape(-1) for f in obj.free])


def _min_norm(obj, grads):
    """Minimum-norm point in the convex hull of the (tangent) gradients."""
    G = np.stack([_flat(obj, _tangent(obj, g)) for g in grads])
    m = G.shape[0]
    lam = np.full(m, 1.0 / m)
    Q = G @ G.T
    for t in range(200):
        grad = Q @ lam
        i = int(np.argmin(grad))
        d = -lam.copy()
        d[i] += 1.0
        dQd = d @ Q @ d
        if dQd <= 1e-300:
            break
        step = float(np.clip(-(lam @ Q @ d) / dQd, 0.0, 1.0))
        if step <= 0:
            break
        lam = lam + step * d
    out = {}
    for f in obj.free:
        out[f.name] = sum(l * g[f.name] for l, g in zip(lam, grads))
    return out


def _feasible(slack) -> bool:
    return (not np.isfinite(slack)) or slack >= -SLACK_TOL


def _ascend(obj: FactoredObjective, params: dict, opts: OptOptions) -> tuple[dict, dict]:
    penalty = opts.penalty
    history = []
    for _round in range(6):
        prob = _Problem(obj, penalty)
        params, it, f = _climb(prob, params, opts)
        history.append({"penalty": penalty, "iterations": it, "score": f})
        vals, slack = obj.evaluate(params)
        if opts.polish:
            cand = _polish(obj, params)
            if cand is not None:
                cv, cs = obj.evaluate(cand)
                if _feasible(cs) and np.all(np.isfinite(cv)) and (
                        not _feasible(slack) or np.min(cv) >= np.min(vals)):
                    params, slack = cand, cs
                    history[-1]["polished"] = True
        if _feasible(slack):
            break
        penalty *= 2.0
    return params, {"rounds": history}


def _climb(prob: _Problem, params: dict, opts: OptOptions):
    """Block-coordinate projected ascent: one backtracking step per free factor
    per iteration, each factor with its own normalization and step size."""
    obj = prob.obj
    f, vals, slack = prob.score(params)
    steps = {fac.name: opts.step0 for fac in obj.free}
    window = [f]
    it = 0
    for it in range(1, opts.max_iter + 1):
        moved = False
        for fac in obj.free:
            for kink in (False, True):
                g = prob.direction(params, vals, slack, kink)[fac.name]
                scale = float(np.max(np.abs(g)))
                if scale <= 1e-15:
                    continue
                t = min(steps[fac.name] * 2.0, opts.step0)
                accepted = False
                while t >= opts.step_floor:
                    row = params[fac.name] + (t / scale) * g
                    cand = dict(params)
                    cand[fac.name] = project_rows(row.reshape(fac.rows, fac.width)).reshape(fac.shape)
                    fc, vc, sc = prob.score(cand)
                    if fc > f:
                        params, f, vals, slack = cand, fc, vc, sc
                        steps[fac.name] = t
                        accepted = True
                        break
                    t *= 0.5
                if accepted:
                    moved = True
                    break
        window.append(f)
        if not moved:
            break
        if len(window) > opts.patience and window[-1] - window[-1 - opts.patience] < opts.tol:
            break
    return params, it, f


def _unflatten(obj: FactoredObjective, x: np.ndarray) -> dict:
    out, k = {}, 0
    for f in obj.free:
        n = f.rows * f.width
        out[f.name] = x[k:k + n].reshape(f.shape)
        k += n
    return out


def _polish(obj: FactoredObjective, params: dict, maxiter: int = 300):
    """SLSQP on (params, t): maximize t with every branch >= t."""
    x0 = np.concatenate([_flat(obj, params), [obj.value(params)]])
    m = len(x0) - 1
    sums = []
    k = 0
    for f in obj.free:
        for r in range(f.rows):
            row = np.zeros(m + 1)
            row[k + r * f.width:k + (r + 1) * f.width] = 1.0
            sums.append(row)
        k += f.rows * f.width
    A = np.array(sums)
    obj_grad = np.zeros(m + 1)
    obj_grad[-1] = -1.0

    def cons(x):
        vals, slack = obj.evaluate(_unflatten(obj, x[:-1]))
        out = vals - x[-1]
        return np.append(out, slack) if obj.slack is not None else out

    def cons_jac(x):
        p = _unflatten(obj, x[:-1])
        probs = obj.joint_probs(p)
        rows = [np.append(_flat(obj, obj.gradient(e, p, probs)), -1.0) for e in obj.branches]
        if obj.slack is not None:
            rows.append(np.append(_flat(obj, obj.gradient(obj.slack, p, probs)), 0.0))
        return np.array(rows)

    with np.errstate(all="ignore"):
        res = minimize(lambda x: -x[-1], x0, jac=lambda x: obj_grad, method="SLSQP",
                       bounds=[(0.0, 1.0)] * m + [(None, None)],
                       constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac},
                                    {"type": "eq", "fun": lambda x: A @ x - 1.0, "jac": lambda x: A}],
                       options={"maxiter": maxiter, "ftol": 1e-12})
    if not np.all(np.isfinite(res.x)):
        return None
    return _project(obj, _unflatten(obj, np.clip(res.x[:-1], 0.0, None)))


def _restart(obj: FactoredObjective, seq: np.random.SeedSequence, opts: OptOptions, index: int):
    rng = np.random.default_rng(seq)
    start = obj.random_params(rng)
    params, info = _ascend(obj, start, opts)
    vals, slack = obj.evaluate(params)
    value = float(np.min(vals))
    feasible = _feasible(slack)
    info.update({"restart": index, "value": value, "slack": float(slack) if np.isfinite(slack) else None,
                 "feasible": bool(feasible)})
    return params, value, slack, feasible, info


def _compositions(total: int, parts: int):
    for c in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for x in c:
            out.append(x - prev - 1)
            prev = x
        out.append(total + parts - 1 - prev - 1)
        yield out


def grid_size(obj: FactoredObjective, levels: int) -> int:
    from math import comb
    n = 1
    for f in obj.free:
        n *= comb(levels + f.width - 1, f.width - 1) ** f.rows
    return n


def grid_search(obj: FactoredObjective, levels: int, limit: int = GRID_POINT_LIMIT, chunk: int = 4096):
    """Exhaustive pass over the probability grid with resolution 1/levels."""
    if obj.space.n_free > GRID_MAX_FREE:
        raise BudgetExceededError(
            f"grid pass needs <= {GRID_MAX_FREE} free parameters, space has {obj.space.n_free}",
            required=obj.space.n_free, limit=GRID_MAX_FREE)
    total = grid_size(obj, levels)
    if total > limit:
        raise BudgetExceededError(f"grid pass needs {total} points, limit is {limit}",
                                  required=total, limit=limit)
    row_sets = []
    for f in obj.free:
        rows = np.array(list(_compositions(levels, f.width)), dtype=float) / levels
        row_sets.append([rows] * f.rows)
    axes = [r for rs in row_sets for r in rs]
    sizes = [len(a) for a in axes]
    best = (-np.inf, None)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        multi = np.unravel_index(idx, sizes)
        params = {}
        k = 0
        for f in obj.free:
            cols = [axes[k + r][multi[k + r]] for r in range(f.rows)]
            k += f.rows
            params[f.name] = np.stack(cols, axis=1).reshape((len(idx),) + f.shape)
        vals, slack = obj.evaluate_batch(params)
        v = vals.min(axis=1)
        v = np.where(slack >= -SLACK_TOL, v, -np.inf)
        j = int(np.argmax(v))
        if v[j] > best[0]:
            best = (float(v[j]), {name: p[j] for name, p in params.items()})
    return best[0], best[1], total


def maximize(obj: FactoredObjective, opts: Optional[OptOptions] = None, **kw) -> OptReport:
    """Best feasible value over Dirichlet restarts and an optional grid pass."""
    opts = opts or OptOptions()
    for k, v in kw.items():
        if not hasattr(opts, k):
            raise DomainError(f"unknown optimizer option {k!r}")
        setattr(opts, k, v)
    if opts.restarts < 1 and not opts.grid_levels:
        raise DomainError("need at least one restart or a grid pass")
    seqs = np.random.SeedSequence(opts.seed).spawn(max(opts.restarts, 0))
    jobs = list(enumerate(seqs))
    if opts.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as ex:
            results = list(ex.map(lambda j: _restart(obj, j[1], opts, j[0]), jobs))
    else:
        results = [_restart(obj, s, opts, i) for i, s in jobs]

    best = None
    for params, value, slack, feasible, info in results:  # merge in restart order
        if feasible and (best is None or value > best[1]):
            best = (params, value, slack)
    grid_value, grid_pts = None, 0
    if opts.grid_levels:
        grid_value, gparams, grid_pts = grid_search(obj, opts.grid_levels)
        if gparams is not None and (best is None or grid_value > best[1]):
            _, gs = obj.evaluate(gparams)
            best = (gparams, grid_value, gs)
        if grid_value == -np.inf:
            grid_value = None
    trajectories = [r[4] for r in results]
    if best is None:
        return OptReport(float("nan"), {}, None, opts.restarts, trajectories,
                         float("nan"), False, grid_value, grid_pts)
    params, value, slack = best
    vals, _ = obj.evaluate(params)
    return OptReport(
        best_value=float(np.min(vals)),
        argmax={k: np.array(v) for k, v in params.items()},
        decision=obj.to_decision(params),
        restarts=opts.restarts,
        trajectories=trajectories,
        feasibility_margin=float(slack),
        feasible=True,
        grid_value=grid_value,
        grid_points=grid_pts,
        branch_values=[float(v) for v in vals],
    )


def trace_region(spec, weights, u_size: int = 2, cribbing: str = "strictly_causal",
                 opts: Optional[OptOptions] = None) -> list:
    """Supporting points of the MAC region, one per weight pair, sorted by r1."""
    opts = opts or OptOptions()
    points = []
    for w1, w2 in weights:
        obj = mac_objective(spec, u_size, cribbing, weights=(w1, w2))
        rep = maximize(obj, OptOptions(**{**opts.__dict__}))
        if not rep.feasible:
            continue
        bounds = mac_bounds_from_joint(obj.joint(rep.argmax))
        _, r1, r2 = inner_lp(bounds.as_tuple(), w1, w2)
        points.append((RatePoint(max(r1, 0.0), max(r2, 0.0)), (w1, w2), rep.best_value))
    points.sort(key=lambda t: (round(t[0].r1, 9), -round(t[0].r2, 9)))
    return points
