"""Localized Gromov distortion, its dimensional thresholds, and the
knot-equivalence certificate.

The distortion of a set is the supremum of intrinsic over euclidean distance;
restricting the supremum to pairs with chord <= 2r localizes it at scale r.
A curve whose local distortion stays below the dimensional threshold at some
scale, paired with another such curve Hausdorff-close relative to those
scales, is certifiably of the same knot class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .curve import hausdorff_distance

#: threshold sequence limit: the distortion of a quarter circle
G_INF = math.pi / math.sqrt(8.0)

#: default number of rungs in the scale ladder
LADDER_SIZE = 40


def distortion_threshold(n):
    """Dimensional distortion threshold, strictly decreasing to pi/sqrt(8).

    For n = 3 this equals 2*pi/(3*sqrt(3)), the distortion of one third of
    a circle.
    """
    if int(n) != n or n < 3:
        raise ValueError("dimension must be an integer >= 3")
    a = math.sqrt((2.0 * n - 2.0) / n)
    return a * math.asin(1.0 / a)


def threshold_angle(n):
    """Angle beta_n at which the arc/chord ratio reaches the threshold."""
    if int(n) != n or n < 3:
        raise ValueError("dimension must be an integer >= 3")
    return 2.0 * math.asin(math.sqrt(n / (2.0 * n - 2.0)))


def arc_chord_ratio(alpha):
    """Arc over chord for a circular arc of opening angle alpha.

    Equals (alpha/2)/sin(alpha/2); strictly increasing on (0, pi], with
    value 1 at 0+ and pi/2 at pi.
    """
    if alpha == 0.0:
        return 1.0
    return (alpha / 2.0) / math.sin(alpha / 2.0)


@dataclass(frozen=True)
class DistortionAngle:
    """Angle alpha in (0, pi) together with its arc/chord ratio."""
    alpha: float
    g_value: float


def distortion_angle(delta):
    """Invert the arc/chord ratio: the unique alpha with ratio(alpha) = delta.

    Requires delta in [1, pi/2); the residual of the root is below 1e-12.
    """
    if not (1.0 <= delta < math.pi / 2.0):
        raise ValueError(f"delta must lie in [1, pi/2), got {delta}")
    lo, hi = 1e-9, math.pi - 1e-12
    if arc_chord_ratio(lo) >= delta:
        alpha = lo
    else:
        alpha = brentq(lambda a: arc_chord_ratio(a) - delta, lo, hi,
                       xtol=1e-15, rtol=8.9e-16)
    return DistortionAngle(alpha=float(alpha), g_value=arc_chord_ratio(alpha))


# -- local distortion ----------------------------------------------------------


def local_distortion(c, r):
    """Local distortion of the sampled curve at scale r, with its argmax pair.

    Supremum of intrinsic/chord over sample pairs with 0 < chord <= 2r;
    returns 1.0 with pair None when no pair qualifies.  Ties resolve to the
    lexicographically smallest (i, j).
    """
    if r <= 0:
        raise ValueError("scale r must be positive")
    chord = c.chord_matrix()
    intr = c.intrinsic_matrix()
    mask = (chord > 0.0) & (chord <= 2.0 * r)
    iu = np.triu_indices(c.n, k=1)
    sel = mask[iu]
    if not np.any(sel):
        return 1.0, None
    ratios = intr[iu][sel] / chord[iu][sel]
    k = int(np.argmax(ratios))
    value = float(ratios[k])
    ii = iu[0][sel][k]
    jj = iu[1][sel][k]
    return max(value, 1.0), (int(ii), int(jj))


def global_distortion(c):
    """Unrestricted distortion: the local distortion at scale diam/2."""
    return local_distortion(c, c.diameter() / 2.0)


def scale_ladder(c, num=LADDER_SIZE):
    """Log-spaced radii from 2 * min edge length up to the diameter."""
    lo = 2.0 * c.min_edge()
    hi = c.diameter()
    if lo >= hi:
        lo = hi / 2.0
    return np.geomspace(lo, hi, num)


@dataclass
class DistortionProfile:
    """Local distortion along a ladder of scales plus the global value."""
    scales: np.ndarray
    values: np.ndarray
    pairs: list
    global_value: float
    global_pair: tuple


def distortion_profile(c, num=LADDER_SIZE):
    scales = scale_ladder(c, num)
    values = np.empty(num)
    pairs = []
    for k, r in enumerate(scales):
        v, pair = local_distortion(c, r)
        values[k] = v
        pairs.append(pair)
    g, gp = global_distortion(c)
    return DistortionProfile(scales=scales, values=values, pairs=pairs,
                             global_value=g, global_pair=gp)


def find_admissible_scale(c, threshold, num=LADDER_SIZE):
    """Largest ladder scale at which local distortion stays below threshold.

    Returns None when no rung qualifies.
    """
    if not (1.0 < threshold < math.pi / 2.0):
        raise ValueError("threshold must lie in (1, pi/2)")
    scales = scale_ladder(c, num)
    for r in scales[::-1]:
        v, _ = local_distortion(c, r)
        if v < threshold:
            return float(r)
    return None


# -- equivalence certificate -----------------------------------------------


@dataclass
class EquivalenceCertificate:
    """Inputs and verdict of the local-distortion equivalence test.

    ``passed`` True is a *sufficient* condition for knot equivalence;
    False only means the test is inconclusive.
    """
    r1: float | None
    r2: float | None
    delta1: float | None
    delta2: float | None
    hausdorff: float
    threshold: float
    margin: float
    passed: bool
    verdict: str = field(init=False)

    def __post_init__(self):
        self.verdict = "equivalent" if self.passed else "inconclusive"

    def to_dict(self):
        return {
            "r1": self.r1, "r2": self.r2,
            "delta1": self.delta1, "delta2": self.delta2,
            "hausdorff": self.hausdorff,
            "threshold": self.threshold, "margin": self.margin,
            "pass": self.passed, "verdict": self.verdict,
        }


def certify_equivalence(a, b, threshold=None, margin=1e-3, num=LADDER_SIZE):
    """Run the sufficient equivalence test on two sampled knots.

    Searches each curve for the largest admissible scale with local
    distortion below ``threshold - margin`` (the margin absorbs the O(1/N)
    underestimate of the discrete supremum), then demands that the Hausdorff
    distance be below a quarter of the smaller scale.
    """
    if threshold is None:
        threshold = distortion_threshold(3)
    thr = threshold - margin
    r1 = find_admissible_scale(a, thr, num)
    r2 = find_admissible_scale(b, thr, num)
    d1 = local_distortion(a, r1)[0] if r1 is not None else None
    d2 = local_distortion(b, r2)[0] if r2 is not None else None
    h = hausdorff_distance(a, b)
    ok = (r1 is not None and r2 is not None
          and d1 < thr and d2 < thr
          and h < 0.25 * min(r1, r2))
    return EquivalenceCertificate(r1=r1, r2=r2, delta1=d1, delta2=d2,
                                  hausdorff=h, threshold=threshold,
                                  margin=margin, passed=bool(ok))
