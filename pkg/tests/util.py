"""Shared curve constructions for the test suite."""

import numpy as np

from knotgauge.curve import Curve, resample_arclength


def curve_from_angles(angles):
    """Planar unit-speed closed polygon from per-edge tangent angles.

    The angle array must satisfy the closure condition sum(cos) = sum(sin)
    ~ 0; edges have length 1/n so the total length is 1.
    """
    n = angles.shape[0]
    u = np.stack([np.cos(angles), np.sin(angles), np.zeros(n)], axis=1)
    q = np.zeros((n, 3))
    q[1:] = np.cumsum(u[:-1], axis=0) / n
    return Curve(q)


def track_curve(n=2048, straight_frac=0.42, seed=None, cap_noise=0.05):
    """Closed unit-length 'racetrack': two exactly straight sides plus caps.

    The first half of the edge angles is a straight run (angle exactly 0)
    followed by a smooth half-turn; the second half repeats it rotated by
    pi, which closes the polygon by symmetry.  ``cap_noise`` adds a seeded
    smooth perturbation to the cap angles only, so the straight sides stay
    exactly straight.  Returns (curve, window_center) where the window
    center parameter sits in the middle of the first straight side.
    """
    assert n % 2 == 0
    half = n // 2
    m = int(straight_frac * half)
    cap = half - m
    angles = np.zeros(half)
    s = np.linspace(0.0, 1.0, cap, endpoint=False)
    # smoothstep angle profile for the cap: C^1 at both junctions
    angles[m:] = np.pi * (3.0 * s**2 - 2.0 * s**3)
    if seed is not None and cap_noise > 0.0:
        rng = np.random.default_rng(seed)
        bump = np.zeros(cap)
        for k in range(2, 6):
            bump += rng.normal() * np.sin(np.pi * k * s) * np.sin(np.pi * s)
        angles[m:] += cap_noise * bump
    full = np.concatenate([angles, angles + np.pi])
    center = (m // 2) / n
    return curve_from_angles(full), center


def kinked_track(n=4096, chi=0.7, straight_frac=0.2):
    """Track with one anomalous edge angle per straight side (p=2 orbit).

    The kink carries O(1) tangent mass into the smallest seminorm windows
    while every other sample on the straight sides keeps the exact tangent,
    so the detection window flags it and the annuli around the kink sample
    stay at mass exactly zero.  Returns (curve, reference, kink_param): the
    reference is the same construction without the kinks.
    """
    half = n // 2
    m = int(straight_frac * half)
    cap = half - m
    base = np.zeros(half)
    s = np.linspace(0.0, 1.0, cap, endpoint=False)
    base[m:] = np.pi * (3.0 * s**2 - 2.0 * s**3)
    kink = m // 2
    angles = base.copy()
    angles[kink] = chi
    curve = curve_from_angles(np.concatenate([angles, angles + np.pi]))
    reference = curve_from_angles(np.concatenate([base, base + np.pi]))
    return curve, reference, kink / n


def torus_knot_raw(a, b, R0=2.0, r0=0.5, n=512):
    """Torus-knot samples resampled to arclength (test-local copy)."""
    t = np.arange(n) / n
    w = R0 + r0 * np.cos(2 * np.pi * b * t)
    q = np.stack([w * np.cos(2 * np.pi * a * t),
                  w * np.sin(2 * np.pi * a * t),
                  r0 * np.sin(2 * np.pi * b * t)], axis=1)
    return resample_arclength(Curve(q), n)


def random_rotation(seed):
    """Haar-ish random rotation matrix via QR."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rigid_moved(c, seed, translation_scale=2.0):
    rng = np.random.default_rng(seed + 1)
    rot = random_rotation(seed)
    shift = rng.normal(scale=translation_scale, size=3)
    return Curve(c.samples @ rot.T + shift)


def ellipse_curve(a=1.5, b=0.75, n=256):
    t = 2 * np.pi * np.arange(4 * n) / (4 * n)
    q = np.stack([a * np.cos(t), b * np.sin(t), np.zeros(4 * n)], axis=1)
    return resample_arclength(Curve(q), n)


def fourier_curve(seed, n=512, modes=5, amp=0.25):
    """Random smooth closed curve from a low-order trigonometric series."""
    rng = np.random.default_rng(seed)
    t = 2 * np.pi * np.arange(n) / n
    q = np.stack([np.cos(t), np.sin(t), np.zeros(n)], axis=1)
    for k in range(2, modes + 2):
        coef = rng.normal(scale=amp / k**2, size=(2, 3))
        q += coef[0] * np.sin(k * t)[:, None] + coef[1] * np.cos(k * t)[:, None]
    return resample_arclength(Curve(q), n)
