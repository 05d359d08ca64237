"""Capacity, capacity-achieving input distributions, dispersion, Gaussian tails."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mot import Channel, Pmf, mutual_info

__all__ = [
    "ConvergenceError",
    "CapacityResult",
    "DispersionResult",
    "blahut_arimoto",
    "cond_info_variance",
    "dispersion",
    "qfunc",
    "qinv",
]


class ConvergenceError(RuntimeError):
    """An iterative computation failed to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class CapacityResult:
    """Output of the alternating-maximization capacity computation."""

    capacity: float
    caid: Pmf
    iterations: int
    residual: float


@dataclass(frozen=True)
class DispersionResult:
    """Conditional information variance at the detected CAIDs, nats^2."""

    v_at_caid: float
    v_min: float
    v_max: float
    unique_caid: bool

    def v_eps(self, eps: float) -> float:
        """Dispersion selected by the target error probability branch."""
        return self.v_min if eps < 0.5 else self.v_max


def blahut_arimoto(
    w: Channel,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    init: Pmf | None = None,
) -> CapacityResult:
    """Channel capacity by alternating maximization, in nats.

    At every iteration the capacity is bracketed between I(p, W) and
    max_a D(W(.|a) || pW); the residual is the bracket width. Raises
    ``ConvergenceError`` if the bracket does not close within ``max_iter``.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    wm = w.as_array()
    kx = w.kx
    p = np.full(kx, 1.0 / kx) if init is None else init.as_array().copy()
    if p.shape != (kx,):
        raise ValueError(f"init has {p.shape[0]} entries, channel has {kx} inputs")

    log_w = np.where(wm > 0.0, np.log(np.where(wm > 0.0, wm, 1.0)), 0.0)
    residual = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        q = p @ wm
        # per-input divergence D(W(.|a) || q); support of q covers every row
        # reachable from supp(p), and multiplicative updates keep p positive
        log_q = np.where(q > 0.0, np.log(np.where(q > 0.0, q, 1.0)), -math.inf)
        d = np.einsum("ab,ab->a", wm, log_w - np.where(wm > 0.0, log_q, 0.0))
        lower = float(p @ d)
        upper = float(np.max(d))
        residual = upper - lower
        if residual <= tol:
            break
        p = p * np.exp(d - upper)
        p /= p.sum()
    caid = Pmf(tuple(float(v) for v in p / p.sum()))
    if residual > tol:
        raise ConvergenceError(
            f"capacity iteration did not reach tol={tol:g} in {max_iter} steps", residual
        )
    return CapacityResult(
        capacity=mutual_info(caid, w), caid=caid, iterations=iterations, residual=residual
    )


def cond_info_variance(p: Pmf, w: Channel) -> float:
    """Conditional information variance V(P, W) in nats^2.

    Expectation over the input of the variance of the information density
    log(W(Y|X)/PW(Y)) under the channel law.
    """
    if p.k != w.kx:
        raise ValueError(f"input dimension mismatch: |X|={w.kx}, |p|={p.k}")
    wm = w.as_array()
    pv = p.as_array()
    q = pv @ wm
    total = 0.0
    for a in range(w.kx):
        if p[a] <= 0.0:
            continue
        mean = 0.0
        mean_sq = 0.0
        for b in range(w.ky):
            wab = wm[a, b]
            if wab <= 0.0:
                continue
            if q[b] <= 0.0:
                raise ValueError(
                    f"information density undefined: output {b} has zero marginal "
                    f"but W({b}|{a}) > 0 with p({a}) > 0"
                )
            dens = math.log(wab / q[b])
            mean += wab * dens
            mean_sq += wab * dens * dens
        total += p[a] * (mean_sq - mean * mean)
    return max(0.0, total)


def _perturbed_starts(kx: int) -> list[Pmf]:
    starts = [Pmf.uniform(kx)]
    for a in range(kx):
        probs = [0.1 / kx] * kx
        probs[a] += 0.9
        total = math.fsum(probs)
        starts.append(Pmf(tuple(v / total for v in probs)))
    return starts


def dispersion(
    w: Channel,
    eps: float,
    candidate_caids: tuple[Pmf, ...] = (),
    tol: float = 1e-9,
    caid_match_tol: float = 1e-6,
) -> DispersionResult:
    """Dispersion of the channel at target error probability ``eps``, nats^2.

    CAID multiplicity is detected heuristically: the fixed-point iteration is
    restarted from perturbed initial distributions, and distinct limits (plus
    any user-supplied candidate CAIDs, for channels where the heuristic is
    not trusted) feed the min/max.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    main = blahut_arimoto(w, tol=tol)
    caids = [main.caid]
    for start in _perturbed_starts(w.kx):
        res = blahut_arimoto(w, tol=tol, init=start)
        caids.append(res.caid)
    for cand in candidate_caids:
        if abs(mutual_info(cand, w) - main.capacity) > caid_match_tol:
            raise ValueError(
                f"candidate CAID achieves I={mutual_info(cand, w):.9f}, "
                f"capacity is {main.capacity:.9f}"
            )
        caids.append(cand)

    unique = all(
        max(abs(a - b) for a, b in zip(c.probs, main.caid.probs)) <= caid_match_tol
        for c in caids
    )
    variances = [cond_info_variance(c, w) for c in caids]
    return DispersionResult(
        v_at_caid=variances[0],
        v_min=min(variances),
        v_max=max(variances),
        unique_caid=unique,
    )


def qfunc(z: float) -> float:
    """Standard Gaussian upper tail probability."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def qinv(p: float, tol: float = 1e-12) -> float:
    """Inverse of ``qfunc`` by bisection with ``tol`` bracketing."""
    if not 0.0 < p < 1.0:
        raise ValueError("qinv requires p in (0, 1)")
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if qfunc(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
