"""Empirical bracket for the smallest b at which a barrier certificate is found.

The predicate scans a fixed grid of (beta_target, a_hyp) per b; bisection
assumes it is monotone in b.  The result is a numerical bracket, not a bound.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .barrier import BarrierCertificate, assemble_drift_barrier, drift_barrier
from .errors import GapMismatch, MorseCausalError, NoVerifiedPoint
from .regions import beta_roots

BETA_REL = (0.001, 0.005, 0.01, 0.02, 0.05, 0.1)
A_GRID = (1.0, 2.0, 4.0, 6.0, 10.0, 20.0)


@dataclass
class Bracket:
    b_lo: float
    b_hi: float
    evaluations: dict
    certificate: BarrierCertificate | None = None

    def as_dict(self) -> dict:
        return {
            "b_lo": self.b_lo,
            "b_hi": self.b_hi,
            "evaluations": {repr(k): v for k, v in sorted(self.evaluations.items())},
            "witness": None if self.certificate is None else self.certificate.params,
        }


def scan_verified(b: float, beta_rel=BETA_REL, a_grid=A_GRID, n: int = 2000) -> BarrierCertificate | None:
    """First Verified drift certificate on the parameter grid, or None."""
    try:
        lo, _ = beta_roots(b)
    except MorseCausalError:
        return None
    for k in beta_rel:
        beta = lo * (1.0 + k)
        try:
            drift_barrier(b, beta)
        except GapMismatch:
            continue
        for a in a_grid:
            try:
                cert = assemble_drift_barrier(b, a, beta, n=n)
            except MorseCausalError:
                continue
            if cert.verified:
                return cert
            drift = next(pc for pc in cert.pieces if pc.name == "drift")
            if not drift.verified:
                break  # the drift piece does not depend on a
    return None


def threshold_bracket(b_lo: float, b_hi: float, tol: float = 0.05, n: int = 2000) -> Bracket:
    if not 0 < b_lo <= b_hi:
        raise ValueError("need 0 < b_lo <= b_hi")
    scan = functools.lru_cache(maxsize=None)(lambda b: scan_verified(b, n=n))
    evals = {}

    def ok(b):
        cert = scan(b)
        evals[b] = cert is not None
        return cert

    top = ok(b_hi)
    if top is None:
        raise NoVerifiedPoint(f"no verified certificate at b = {b_hi}")
    if ok(b_lo) is not None:
        return Bracket(b_lo, b_lo, evals, scan(b_lo))
    lo, hi = b_lo, b_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid) is not None:
            hi = mid
        else:
            lo = mid
    return Bracket(lo, hi, evals, scan(hi))
