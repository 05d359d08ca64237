"""Error and strong-converse exponent functionals.

Every functional is a minimum of the conditional KL divergence D(V||W|P) over
transition matrices V, possibly plus a rate penalty or under a mutual
information constraint. Two solver routes cover all cases:

- convex problems (the penalized forms and every constraint of the form
  I(P,V) <= R) go through a tilted family argmin_V D + lam*I, convex for
  every lam >= -1 because D - I is itself convex; the constrained optimum is
  found by bisecting lam until the tilted minimizer meets the rate;
- the non-convex constraint I(P,V) >= R is handled by a product-of-simplices
  grid with multi-start coordinate-descent refinement, line searches being
  restricted to the feasible components of each search direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mot import Channel, Pmf, entropy, mutual_info

__all__ = [
    "SolverConfig",
    "ExponentPoint",
    "random_coding_exponent",
    "sphere_packing_exponent",
    "abandonment_exponent",
    "error_exponent",
    "sc_random_coding_exponent",
    "sc_sphere_packing_exponent",
    "correct_decoding_exponent",
    "critical_rate",
]

_FEAS_TOL = 1e-12
_GOLDEN_ITERS = 80
_MAX_SWEEPS = 60
_MULTISTART = 32
_LAMBDA_CAP = 2.0**50


@dataclass(frozen=True)
class SolverConfig:
    """Grid resolution, refinement effort and tolerance for the KL solver."""

    grid_resolution: int = 40
    refinement_rounds: int = 3
    tol: float = 1e-6

    def __post_init__(self):
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.refinement_rounds < 0:
            raise ValueError("refinement_rounds must be >= 0")


@dataclass(frozen=True)
class ExponentPoint:
    """A computed exponent value at one operating point.

    ``value`` may be +inf when the defining feasible set is empty or every
    feasible transition matrix fails absolute continuity. ``argmin_channel``
    is None exactly in that case. ``solver_gap`` is the residual after
    refinement (last-sweep improvement plus any constraint slack).
    """

    rate_R: float | None
    rate_r: float | None
    input: Pmf
    value: float
    argmin_channel: Channel | None
    solver_gap: float


# ---------------------------------------------------------------------------
# evaluation


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _simplex_grid(k: int, resolution: int) -> np.ndarray:
    pts = np.array(list(_compositions(resolution - 1, k)), dtype=float)
    return pts / (resolution - 1)


def _channel_grid(kx: int, ky: int, resolution: int) -> np.ndarray:
    rows = _simplex_grid(ky, resolution)
    m = len(rows)
    if m**kx > 400_000:
        raise ValueError(
            f"grid of {m}^{kx} transition matrices is too large; "
            "lower grid_resolution for this alphabet size"
        )
    idx = np.indices((m,) * kx).reshape(kx, -1).T
    return rows[idx]  # (N, kx, ky)


def _batch_d_i(vs: np.ndarray, wm: np.ndarray, pv: np.ndarray):
    """Vectorized D(V||W|P) and I(P,V) over a stack of transition matrices."""
    pos = vs > 0.0
    logv = np.zeros_like(vs)
    np.log(vs, out=logv, where=pos)
    logw = np.where(wm > 0.0, np.log(np.where(wm > 0.0, wm, 1.0)), 0.0)
    rel = vs * (logv - logw)
    d = np.einsum("a,nab->n", pv, rel)
    bad = pos & (wm <= 0.0) & (pv[:, None] > 0.0)
    d = np.where(bad.any(axis=(1, 2)), math.inf, d)
    d = np.maximum(d, 0.0)

    pvout = np.einsum("a,nab->nb", pv, vs)
    logq = np.zeros_like(pvout)
    np.log(pvout, out=logq, where=pvout > 0.0)
    i = np.einsum("a,nab->n", pv, vs * logv) - np.einsum("nb,nb->n", pvout, logq)
    return d, np.maximum(i, 0.0)


def _d_i(v: np.ndarray, wm: np.ndarray, pv: np.ndarray):
    d, i = _batch_d_i(v[None, :, :], wm, pv)
    return float(d[0]), float(i[0])


@lru_cache(maxsize=64)
def _grid_eval(w: Channel, p: Pmf, resolution: int):
    """Grid of transition matrices with the channel appended, plus D and I."""
    grid = _channel_grid(w.kx, w.ky, resolution)
    grid = np.concatenate([grid, w.as_array()[None, :, :]])
    d, i = _batch_d_i(grid, w.as_array(), p.as_array())
    grid.setflags(write=False)
    d.setflags(write=False)
    i.setflags(write=False)
    return grid, d, i


# ---------------------------------------------------------------------------
# line-search machinery


def _moves(kx: int, ky: int) -> list[np.ndarray]:
    out = []
    for b1 in range(ky):
        for b2 in range(b1 + 1, ky):
            for a in range(kx):
                delta = np.zeros((kx, ky))
                delta[a, b1] = 1.0
                delta[a, b2] = -1.0
                out.append(delta)
            # shift the same column pair across every row at once, so
            # constant-row (zero mutual information) matrices stay reachable
            delta = np.zeros((kx, ky))
            delta[:, b1] = 1.0
            delta[:, b2] = -1.0
            out.append(delta)
    return out


def _box_interval(v: np.ndarray, delta: np.ndarray) -> tuple[float, float]:
    up = delta > 0
    dn = delta < 0
    t_hi = min((1.0 - v[up]).min() if up.any() else math.inf, v[dn].min() if dn.any() else math.inf)
    t_lo = -min(v[up].min() if up.any() else math.inf, (1.0 - v[dn]).min() if dn.any() else math.inf)
    return t_lo, t_hi


def _golden(f, lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-15:
        t = 0.5 * (lo + hi)
        return t, f(t)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(_GOLDEN_ITERS):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        if b - a < 1e-14:
            break
    for t_end, f_end in ((lo, f(lo)), (hi, f(hi))):
        if f_end < min(fc, fd):
            return t_end, f_end
    return (c, fc) if fc <= fd else (d, fd)


def _bisect_edge(feasible, t_infeasible: float, t_feasible: float, iters: int = 60) -> float:
    """Boundary of a feasibility predicate between an infeasible and a feasible
    point; returns a t on the feasible side."""
    for _ in range(iters):
        mid = 0.5 * (t_infeasible + t_feasible)
        if feasible(mid):
            t_feasible = mid
        else:
            t_infeasible = mid
    return t_feasible


def _feasible_segments(
    i_of_t, rate: float, t_lo: float, t_hi: float, kind: str
) -> list[tuple[float, float]]:
    """Components of {t in [t_lo, t_hi] : I(t) <= R} (kind 'le') or {I >= R} ('ge').

    I is convex along a line, so 'le' yields at most one interval and 'ge' at
    most two. Does not assume t = 0 is strictly feasible: iterates can sit
    exactly on the constraint boundary or drift a hair outside it.
    """
    g = lambda t: i_of_t(t) - rate
    t_m, g_m = _golden(g, t_lo, t_hi)
    if kind == "le":
        feas = lambda t: g(t) <= 0.0
        if g_m > 0.0:
            return []
        left = t_lo if feas(t_lo) else _bisect_edge(feas, t_lo, t_m)
        right = t_hi if feas(t_hi) else _bisect_edge(feas, t_hi, t_m)
        return [(left, right)]
    # kind == "ge": the infeasible set is an open interval around the minimizer
    feas = lambda t: g(t) >= 0.0
    if g_m >= 0.0:
        return [(t_lo, t_hi)]
    segs = []
    if feas(t_lo):
        segs.append((t_lo, _bisect_edge(feas, t_m, t_lo)))
    if feas(t_hi):
        segs.append((_bisect_edge(feas, t_m, t_hi), t_hi))
    return segs


def _refine(
    v0: np.ndarray,
    objective,
    wm: np.ndarray,
    pv: np.ndarray,
    cfg: SolverConfig,
    constraint: tuple[str, float] | None,
) -> tuple[np.ndarray, float, float]:
    """Coordinate-descent refinement from one start; returns (V, value, residual)."""
    kx, ky = v0.shape
    v = v0.copy()
    f_cur = objective(*_d_i(v, wm, pv))
    last_improvement = math.inf
    for sweep in range(_MAX_SWEEPS):
        f_before = f_cur
        for delta in _moves(kx, ky):
            t_lo, t_hi = _box_interval(v, delta)
            if t_hi - t_lo < 1e-15:
                continue

            def f_of_t(t):
                return objective(*_d_i(v + t * delta, wm, pv))

            if constraint is None:
                segments = [(t_lo, t_hi)]
            else:
                kind, rate = constraint
                i_of_t = lambda t: _d_i(v + t * delta, wm, pv)[1]
                segments = _feasible_segments(i_of_t, rate, t_lo, t_hi, kind)
            best_t, best_f = 0.0, f_cur
            for a, b in segments:
                t, f_val = _golden(f_of_t, a, b)
                if f_val < best_f:
                    best_t, best_f = t, f_val
            if best_f < f_cur - 1e-16 and best_t != 0.0:
                v = np.clip(v + best_t * delta, 0.0, 1.0)
                v /= v.sum(axis=1, keepdims=True)
                f_cur = best_f
        last_improvement = f_before - f_cur
        if sweep + 1 >= cfg.refinement_rounds and last_improvement < cfg.tol / 10.0:
            break
    return v, f_cur, max(last_improvement, 0.0)


def _channel_of(v: np.ndarray | None) -> Channel | None:
    if v is None:
        return None
    rows = np.clip(v, 0.0, None)
    rows /= rows.sum(axis=1, keepdims=True)
    return Channel.from_rows(rows.tolist())


# ---------------------------------------------------------------------------
# convex route: tilted family and the Lagrangian path


def _tilted_argmin(
    w: Channel, p: Pmf, lam: float, cfg: SolverConfig, v0: np.ndarray | None = None
) -> tuple[np.ndarray, float, float, float]:
    """argmin over V of D(V||W|P) + lam * I(P,V), for lam >= -1.

    Returns (V, D, I, residual). Convex for the whole admissible lam range
    because both D + I and D - I are convex in V.
    """
    wm, pv = w.as_array(), p.as_array()
    if v0 is None:
        grid, d, i = _grid_eval(w, p, cfg.grid_resolution)
        v0 = grid[int(np.argmin(d + lam * i))]
    v, _, res = _refine(v0, lambda d_, i_: d_ + lam * i_, wm, pv, cfg, None)
    d_at, i_at = _d_i(v, wm, pv)
    return v, d_at, i_at, res


@lru_cache(maxsize=128)
def _tilted_unit(w: Channel, p: Pmf, cfg: SolverConfig):
    """Cached minimizer of D + I; its mutual information is the critical rate."""
    v, d_at, i_at, res = _tilted_argmin(w, p, 1.0, cfg)
    return d_at, i_at, _channel_of(v), res


def _geometric_row_mix(w: Channel, p: Pmf) -> tuple[float, np.ndarray | None]:
    """Closed-form min over constant-row V of D(V||W|P): the normalized
    geometric mean of the channel rows weighted by p. +inf when the rows
    share no common support on supp(p)."""
    wm, pv = w.as_array(), p.as_array()
    used = pv > 0.0
    with np.errstate(divide="ignore"):
        logw = np.where(wm > 0.0, np.log(np.where(wm > 0.0, wm, 1.0)), -math.inf)
    c = np.sum(pv[used, None] * logw[used, :], axis=0)
    if np.all(np.isinf(c)):
        return math.inf, None
    cmax = np.max(c[np.isfinite(c)])
    weights = np.exp(c - cmax)
    value = -(cmax + math.log(weights.sum()))
    q = weights / weights.sum()
    v = np.tile(q, (w.kx, 1))
    return max(value, 0.0), v


def _min_d_below_rate(
    w: Channel, p: Pmf, rate: float, cfg: SolverConfig, tilt_shift: float
) -> tuple[float, np.ndarray | None, float]:
    """min over {V : I(P,V) <= rate} of D(V||W|P) + tilt_shift * (rate - I(P,V)).

    tilt_shift 0 gives the constrained divergence minimization; tilt_shift 1
    gives the penalized strong-converse form. Follows the Lagrangian path
    lam -> argmin D + lam*I, on which I is nonincreasing, bisecting lam until
    the constraint is met. Returns (value, V, residual).
    """
    base_lam = -tilt_shift
    v, d_at, i_at, res = _tilted_argmin(w, p, base_lam, cfg)
    if i_at <= rate + _FEAS_TOL:
        return d_at + tilt_shift * max(rate - i_at, 0.0), v, res

    # bracket: I decreases along increasing lam
    lam_lo, lam_hi = base_lam, max(1.0, base_lam + 1.0)
    v_hi, d_hi, i_hi, res_hi = _tilted_argmin(w, p, lam_hi, cfg, v0=v)
    while i_hi > rate and lam_hi < _LAMBDA_CAP:
        lam_lo, v = lam_hi, v_hi
        lam_hi = lam_hi * 4.0
        v_hi, d_hi, i_hi, res_hi = _tilted_argmin(w, p, lam_hi, cfg, v0=v_hi)
    if i_hi > rate:
        # even extreme tilts cannot push I below the rate: nothing with finite
        # divergence is feasible
        geo_val, geo_v = _geometric_row_mix(w, p)
        if geo_v is not None and rate >= -_FEAS_TOL:
            geo_i = _d_i(geo_v, w.as_array(), p.as_array())[1]
            if geo_i <= rate + _FEAS_TOL:
                return geo_val + tilt_shift * max(rate - geo_i, 0.0), geo_v, 0.0
        return math.inf, None, 0.0

    best_val, best_v, best_res = d_hi + tilt_shift * (rate - i_hi), v_hi, res_hi
    for _ in range(60):
        lam_mid = 0.5 * (lam_lo + lam_hi)
        v_mid, d_mid, i_mid, res_mid = _tilted_argmin(w, p, lam_mid, cfg, v0=best_v)
        if i_mid <= rate:
            lam_hi = lam_mid
            val = d_mid + tilt_shift * (rate - i_mid)
            if val < best_val:
                best_val, best_v, best_res = val, v_mid, res_mid
        else:
            lam_lo = lam_mid
        if lam_hi - lam_lo < 1e-12 * max(1.0, lam_hi):
            break

    # a constant-row candidate is always feasible and occasionally better when
    # the rate sits against zero
    geo_val, geo_v = _geometric_row_mix(w, p)
    if geo_v is not None:
        geo_i = _d_i(geo_v, w.as_array(), p.as_array())[1]
        val = geo_val + tilt_shift * max(rate - geo_i, 0.0)
        if geo_i <= rate + _FEAS_TOL and val < best_val:
            best_val, best_v, best_res = val, geo_v, 0.0
    return max(best_val, 0.0), best_v, best_res


# ---------------------------------------------------------------------------
# non-convex route: grid multi-start under I >= R


def _min_d_above_rate(
    w: Channel, p: Pmf, rate: float, cfg: SolverConfig
) -> tuple[float, np.ndarray | None, float]:
    wm, pv = w.as_array(), p.as_array()
    grid, d, i = _grid_eval(w, p, cfg.grid_resolution)
    feasible = i >= rate - _FEAS_TOL
    values = np.where(feasible, d, math.inf)
    finite = np.isfinite(values)
    if not finite.any():
        return math.inf, None, 0.0
    order = np.argsort(values)
    n_starts = min(_MULTISTART, int(finite.sum()))
    best_v, best_f, best_res = None, math.inf, 0.0
    for idx in order[:n_starts]:
        v, f_val, res = _refine(grid[idx], lambda dd, ii: dd, wm, pv, cfg, ("ge", rate))
        _, i_at = _d_i(v, wm, pv)
        if i_at < rate - 1e-9:
            continue
        if f_val < best_f:
            best_v, best_f, best_res = v, f_val, res
    if best_v is None:
        return math.inf, None, 0.0
    return max(best_f, 0.0), best_v, best_res


# ---------------------------------------------------------------------------
# public functionals


def sphere_packing_exponent(
    rate: float, p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()
) -> ExponentPoint:
    """min D(V||W|P) over {V : I(P,V) <= R}, in nats; +inf when nothing
    feasible is absolutely continuous w.r.t. the channel."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if mutual_info(p, w) <= rate:
        return ExponentPoint(rate_R=rate, rate_r=None, input=p, value=0.0,
                             argmin_channel=w, solver_gap=0.0)
    value, v, res = _min_d_below_rate(w, p, rate, cfg, tilt_shift=0.0)
    gap = res
    if v is not None:
        _, i_at = _d_i(v, w.as_array(), p.as_array())
        gap += max(0.0, i_at - rate)
    return ExponentPoint(rate_R=rate, rate_r=None, input=p, value=value,
                         argmin_channel=_channel_of(v), solver_gap=gap)


def random_coding_exponent(
    rate: float, p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()
) -> ExponentPoint:
    """min D(V||W|P) + |I(P,V) - R|+ over all V, in nats.

    Solved as the better of its two smooth branches: the constrained problem
    on {I <= R} and the tilted problem min (D + I) - R, valid while the
    tilted minimizer stays above the rate.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    branch_a = sphere_packing_exponent(rate, p, w, cfg)
    d_t, i_t, v_t, res_t = _tilted_unit(w, p, cfg)
    if i_t >= rate and d_t + i_t - rate < branch_a.value:
        return ExponentPoint(rate_R=rate, rate_r=None, input=p,
                             value=max(d_t + i_t - rate, 0.0),
                             argmin_channel=v_t, solver_gap=res_t)
    return ExponentPoint(rate_R=rate, rate_r=None, input=p, value=branch_a.value,
                         argmin_channel=branch_a.argmin_channel,
                         solver_gap=branch_a.solver_gap)


def abandonment_exponent(
    r: float, p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()
) -> ExponentPoint:
    """min D(V||W|P) over {V : I(P,V) <= H(P) - r}; equals the sphere-packing
    exponent evaluated at rate H(P) - r."""
    h = entropy(p)
    if not -1e-12 <= r <= h + 1e-12:
        raise ValueError(f"abandonment rate must lie in [0, H(P)] = [0, {h:.6f}]")
    point = sphere_packing_exponent(max(h - r, 0.0), p, w, cfg)
    return ExponentPoint(rate_R=None, rate_r=r, input=p, value=point.value,
                         argmin_channel=point.argmin_channel, solver_gap=point.solver_gap)


def error_exponent(
    rate: float, r: float, p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()
) -> ExponentPoint:
    """Ensemble error exponent: min of the random-coding exponent at R and the
    abandonment exponent at r."""
    er = random_coding_exponent(rate, p, w, cfg)
    ea = abandonment_exponent(r, p, w, cfg)
    winner = er if er.value <= ea.value else ea
    return ExponentPoint(rate_R=rate, rate_r=r, input=p, value=winner.value,
                         argmin_channel=winner.argmin_channel,
                         solver_gap=max(er.solver_gap, ea.solver_gap))


def sc_sphere_packing_exponent(
    rate: float, p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()
) -> ExponentPoint:
    """min D(V||W|P) over {V : I(P,V) >= R}; +inf when R exceeds the largest
    mutual information any channel can deliver at this input."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if mutual_info(p, w) >= rate:
        return ExponentPoint(rate_R=rate, rate_r=None, input=p, value=0.0,
                             argmin_channel=w, solver_gap=0.0)
    value, v, res = _min_d_above_rate(w, p, rate, cfg)
    gap = res
    if v is not None:
        _, i_at = _d_i(v, w.as_array(), p.as_array())
        gap += max(0.0, rate - i_at)
    return ExponentPoint(rate_R=rate, rate_r=None, input=p, value=value,
                         argmin_channel=_channel_of(v), solver_gap=gap)


def sc_random_coding_exponent(
    rate: float, p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()
) -> ExponentPoint:
    """min D(V||W|P) + |R - I(P,V)|+ over all V, in nats.

    Zero when R <= I(P,W); otherwise the penalty is active and the problem is
    the convex minimization of D + R - I over {I <= R}.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if mutual_info(p, w) >= rate:
        return ExponentPoint(rate_R=rate, rate_r=None, input=p, value=0.0,
                             argmin_channel=w, solver_gap=0.0)
    value, v, res = _min_d_below_rate(w, p, rate, cfg, tilt_shift=1.0)
    return ExponentPoint(rate_R=rate, rate_r=None, input=p, value=value,
                         argmin_channel=_channel_of(v), solver_gap=res)


def correct_decoding_exponent(
    rate: float, r: float, p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()
) -> ExponentPoint:
    """Ensemble strong-converse exponent: the constrained divergence minimum at
    the dominant rate max{R, H(P) - r}."""
    h = entropy(p)
    if not -1e-12 <= r <= h + 1e-12:
        raise ValueError(f"abandonment rate must lie in [0, H(P)] = [0, {h:.6f}]")
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    point = sc_sphere_packing_exponent(max(rate, h - r), p, w, cfg)
    return ExponentPoint(rate_R=rate, rate_r=r, input=p, value=point.value,
                         argmin_channel=point.argmin_channel, solver_gap=point.solver_gap)


def critical_rate(p: Pmf, w: Channel, cfg: SolverConfig = SolverConfig()) -> float:
    """Smallest rate above which the sphere-packing and random-coding exponents
    agree, in nats.

    The two curves meet tangentially where the minimizer of D + I delivers
    mutual information equal to the rate, so the rate is read off one smooth
    convex solve; a sampled sweep then confirms the gap stays closed up to
    I(P,W). Returns 0.0 for degenerate channels whose tilted minimizer is the
    channel itself (there the curves coincide wherever both are finite).
    """
    d_t, i_t, _, _ = _tilted_unit(w, p, cfg)
    if d_t <= cfg.tol:
        return 0.0
    r_cr = i_t
    i_w = mutual_info(p, w)
    for r_q in np.linspace(min(r_cr + 1e-3, i_w), i_w, 4):
        gap = (sphere_packing_exponent(float(r_q), p, w, cfg).value
               - random_coding_exponent(float(r_q), p, w, cfg).value)
        if not gap <= 50.0 * cfg.tol:
            raise RuntimeError(
                f"exponent gap {gap:.3e} fails to close at rate {r_q:.6f}; "
                "critical-rate estimate unreliable"
            )
    return r_cr
