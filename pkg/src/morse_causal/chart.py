"""Morse chart on R^4 and the degenerate Lorentz metric built from it.

The chart is f(z) = 1/2 (-x1^2 - b x2^2 + y1^2 + y2^2) with z = (x1, x2, y1, y2),
so grad f = A z with A = diag(-1, -b, 1, 1).  The metric is

    g(u, v) = |grad f|^2 <u, v> - zeta <grad f, u> <grad f, v>

and a vector is timelike iff its angle to +-grad f is below theta, where
cos(theta) = zeta**-0.5.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroVector

#: relative half-width of the lightlike band around cos(theta)
LIGHTLIKE_TOL = 1e-9


class CausalClass(enum.Enum):
    TimelikePos = "TimelikePos"
    TimelikeNeg = "TimelikeNeg"
    Lightlike = "Lightlike"
    Spacelike = "Spacelike"

    @property
    def is_timelike(self) -> bool:
        return self in (CausalClass.TimelikePos, CausalClass.TimelikeNeg)


@dataclass(frozen=True)
class Classification:
    """A causal label plus a signed margin.

    ``margin`` is positive for timelike vectors and negative for spacelike
    ones; it is zero exactly for the Lightlike label.
    """

    label: CausalClass
    margin: float = 0.0

    @property
    def is_timelike(self) -> bool:
        return self.label.is_timelike

    def __eq__(self, other):
        if isinstance(other, CausalClass):
            return self.label is other
        if isinstance(other, Classification):
            return self.label is other.label and self.margin == other.margin
        return NotImplemented

    def __hash__(self):
        return hash((self.label, self.margin))

    def __str__(self):
        return self.label.value


@dataclass(frozen=True)
class MorseChart:
    b: float = 8.0
    zeta: float = 2.0
    theta: float = field(init=False)
    coeffs: tuple = field(init=False)

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"b must be positive, got {self.b}")
        if not (self.zeta > 1 and math.isfinite(self.zeta)):
            raise ValueError(f"zeta must exceed 1, got {self.zeta}")
        object.__setattr__(self, "theta", math.acos(self.zeta ** -0.5))
        object.__setattr__(self, "coeffs", (-1.0, -float(self.b), 1.0, 1.0))

    @property
    def cos_theta(self) -> float:
        return self.zeta ** -0.5

    @property
    def A(self) -> np.ndarray:
        return np.array(self.coeffs)


def morse_f(chart: MorseChart, z) -> float:
    z = np.asarray(z, dtype=float)
    return 0.5 * (-z[..., 0] ** 2 - chart.b * z[..., 1] ** 2 + z[..., 2] ** 2 + z[..., 3] ** 2)


def gradient4(chart: MorseChart, z) -> np.ndarray:
    return np.asarray(z, dtype=float) * chart.A


def metric_g(chart: MorseChart, z, u, v) -> float:
    n = gradient4(chart, z)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nn = np.sum(n * n, axis=-1)
    return nn * np.sum(u * v, axis=-1) - chart.zeta * np.sum(n * u, axis=-1) * np.sum(n * v, axis=-1)


def _label_from_cos(cos: float, c: float) -> Classification:
    margin = abs(cos) - c
    if abs(margin) <= LIGHTLIKE_TOL * c:
        return Classification(CausalClass.Lightlike, 0.0)
    if margin > 0:
        label = CausalClass.TimelikePos if cos > 0 else CausalClass.TimelikeNeg
        return Classification(label, margin)
    return Classification(CausalClass.Spacelike, margin)


def classify4(chart: MorseChart, z, v) -> Classification:
    """Causal class of the tangent vector ``v`` at ``z``.

    At the critical point every vector is lightlike (g vanishes there).
    """
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ZeroVector("classify4 needs a nonzero vector")
    n = gradient4(chart, z)
    nn = np.linalg.norm(n)
    if nn == 0:
        return Classification(CausalClass.Lightlike, 0.0)
    cos = float(np.dot(n, v) / (nn * nv))
    return _label_from_cos(cos, chart.cos_theta)


def eigenlines2d(chart: MorseChart, tol: float = 1e-12):
    """Eigen-directions of the 2-D model matrices A+- = -Rot(+-theta) diag(1, b).

    Returns ``None`` when cos(theta) < 2 sqrt(b)/(1+b) (complex eigenvalues,
    spiralling flow).  Otherwise returns ``{"plus": [...], "minus": [...]}``
    with unit direction vectors; at the threshold each list has one entry.
    """
    b = chart.b
    c = chart.cos_theta
    gm_am = 2.0 * math.sqrt(b) / (1.0 + b)
    if c < gm_am - tol:
        return None
    out = {}
    D = np.diag([1.0, b])
    for key, sgn in (("plus", 1.0), ("minus", -1.0)):
        th = sgn * chart.theta
        rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        M = -rot @ D
        tr = M[0, 0] + M[1, 1]
        disc = max(tr * tr - 4.0 * np.linalg.det(M), 0.0)
        if c - gm_am <= tol:
            lams = [tr / 2.0]
        else:
            lams = [(tr + math.sqrt(disc)) / 2.0, (tr - math.sqrt(disc)) / 2.0]
        dirs = []
        for lam in lams:
            v1 = np.array([-M[0, 1], M[0, 0] - lam])
            v2 = np.array([M[1, 1] - lam, -M[1, 0]])
            v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
            dirs.append(v / np.linalg.norm(v))
        out[key] = dirs
    return out
