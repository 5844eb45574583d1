"""Sampled closed space curves with intrinsic and extrinsic metrics.

A curve is a closed polyline in R^3 given by N >= 8 ordered vertices; sample
i carries the parameter t_i = i/N on R/Z.  All analysis modules operate on
these polygons.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

MIN_SAMPLES = 8


class CurveError(ValueError):
    """Invalid curve data (too few samples, repeated points, bad file)."""


def wrap01(s):
    """Reduce a parameter (scalar or array) to [0, 1)."""
    return s - np.floor(s)


def param_distance(s, t):
    """Periodic distance |s - t| on R/Z, always in [0, 1/2]."""
    d = abs(wrap01(s) - wrap01(t))
    return min(d, 1.0 - d)


class Curve:
    """Closed polyline in R^3 sampled at N uniform parameters on R/Z.

    Vertices are immutable after construction; derived quantities (edge
    lengths, cumulative arclength, tangents) are cached lazily.
    """

    def __init__(self, samples, validate=True):
        q = np.array(samples, dtype=float)
        if q.ndim != 2 or q.shape[1] != 3:
            raise CurveError("samples must be an (N, 3) array")
        if validate:
            if q.shape[0] < MIN_SAMPLES:
                raise CurveError(f"N < {MIN_SAMPLES} (got {q.shape[0]})")
            if not np.all(np.isfinite(q)):
                raise CurveError("non-finite coordinates")
            edges = np.roll(q, -1, axis=0) - q
            if np.any(np.einsum("ij,ij->i", edges, edges) == 0.0):
                raise CurveError("consecutive samples coincide")
        q.setflags(write=False)
        self._q = q
        self._cache = {}

    # -- basic accessors ---------------------------------------------------

    @property
    def samples(self):
        return self._q

    @property
    def n(self):
        return self._q.shape[0]

    def params(self):
        """Sample parameters t_i = i/N."""
        return np.arange(self.n) / self.n

    def edge_vectors(self):
        return np.roll(self._q, -1, axis=0) - self._q

    def edge_lengths(self):
        if "edge_lengths" not in self._cache:
            e = self.edge_vectors()
            self._cache["edge_lengths"] = np.sqrt(np.einsum("ij,ij->i", e, e))
        return self._cache["edge_lengths"]

    def cum_lengths(self):
        """Arclength positions S_i of the vertices, S_0 = 0."""
        if "cum_lengths" not in self._cache:
            s = np.concatenate([[0.0], np.cumsum(self.edge_lengths())])
            self._cache["cum_lengths"] = s
        return self._cache["cum_lengths"]

    def total_length(self):
        return float(self.cum_lengths()[-1])

    def diameter(self):
        """Largest pairwise vertex distance."""
        if "diameter" not in self._cache:
            self._cache["diameter"] = float(np.max(self.chord_matrix()))
        return self._cache["diameter"]

    def min_edge(self):
        return float(np.min(self.edge_lengths()))

    # -- metrics -----------------------------------------------------------

    def intrinsic_distance(self, i, j):
        """Length of the shorter polygonal arc between samples i and j."""
        s = self.cum_lengths()
        total = s[-1]
        d = abs(s[i % self.n] - s[j % self.n])
        return float(min(d, total - d))

    def intrinsic_matrix(self):
        """N x N matrix of shorter-arc lengths between all sample pairs."""
        if "intrinsic_matrix" not in self._cache:
            s = self.cum_lengths()[:-1]
            total = self.total_length()
            d = np.abs(s[:, None] - s[None, :])
            self._cache["intrinsic_matrix"] = np.minimum(d, total - d)
        return self._cache["intrinsic_matrix"]

    def chord_matrix(self):
        """N x N matrix of euclidean vertex distances."""
        if "chord_matrix" not in self._cache:
            q = self._q
            diff = q[:, None, :] - q[None, :, :]
            self._cache["chord_matrix"] = np.sqrt(
                np.einsum("ijk,ijk->ij", diff, diff))
        return self._cache["chord_matrix"]

    def tangents(self):
        """Unit edge directions u_i = (q_{i+1} - q_i)/|q_{i+1} - q_i|."""
        if "tangents" not in self._cache:
            e = self.edge_vectors()
            lens = self.edge_lengths()
            if np.any(lens == 0.0):
                raise CurveError("zero-length edge")
            self._cache["tangents"] = e / lens[:, None]
        return self._cache["tangents"]

    def point_at_arclength(self, s):
        """Point on the polyline at arclength position s (mod total length)."""
        cum = self.cum_lengths()
        total = cum[-1]
        s = s % total
        k = int(np.searchsorted(cum, s, side="right") - 1)
        k = min(k, self.n - 1)
        q = self._q
        a = q[k]
        b = q[(k + 1) % self.n]
        seg = cum[k + 1] - cum[k]
        frac = (s - cum[k]) / seg
        return a + frac * (b - a)

    def index_of_param(self, x):
        """Nearest sample index to the parameter x in [0, 1)."""
        return int(round(wrap01(x) * self.n)) % self.n


def intrinsic_distance(c, i, j):
    return c.intrinsic_distance(i, j)


def discrete_tangent(c):
    """Unit tangent samples of an arclength-resampled curve."""
    return c.tangents()


# -- point / polyline distances ---------------------------------------------

def points_to_polyline_distance(points, c):
    """Distance from each query point to the closed polyline of ``c``.

    Projects onto every edge (clamped) and takes the minimum; exact for
    polygons, O(len(points) * N).
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    a = c.samples
    v = c.edge_vectors()
    vv = np.einsum("ij,ij->i", v, v)
    # (P, N) parameter of the foot of the perpendicular, clamped to the edge
    w = p[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pnk,nk->pn", w, v) / vv[None, :], 0.0, 1.0)
    foot = a[None, :, :] + t[:, :, None] * v[None, :, :]
    d = np.sqrt(np.einsum("pnk,pnk->pn", p[:, None, :] - foot, p[:, None, :] - foot))
    return d.min(axis=1)


def point_to_polyline_distance(point, c):
    """Distance from one point to the polyline; scalar fast path."""
    p = np.asarray(point, dtype=float)
    a = c.samples
    v = c.edge_vectors()
    vv = np.einsum("ij,ij->i", v, v)
    w = p - a
    t = np.einsum("ij,ij->i", w, v) / vv
    np.clip(t, 0.0, 1.0, out=t)
    diff = w - t[:, None] * v
    return float(np.sqrt(np.einsum("ij,ij->i", diff, diff).min()))


def hausdorff_distance(a, b):
    """Symmetric Hausdorff distance between two sampled curves.

    Vertex-to-segment in both directions: each vertex of one curve is
    measured against the full polyline of the other, which avoids O(1/N)
    phase artifacts of plain vertex-to-vertex evaluation.
    """
    d_ab = _directed_vertex_polyline(a, b)
    d_ba = _directed_vertex_polyline(b, a)
    return max(d_ab, d_ba)


def _directed_vertex_polyline(a, b, chunk=512):
    worst = 0.0
    q = a.samples
    for lo in range(0, a.n, chunk):
        d = points_to_polyline_distance(q[lo:lo + chunk], b)
        worst = max(worst, float(d.max()))
    return worst


# -- resampling ---------------------------------------------------------------

def resample_arclength(c, n_out, tol=1e-12, max_iter=200):
    """Resample to ``n_out`` vertices on the input polyline with equal edges.

    Starts from equal arc spacing along the input and iterates a
    chord-length reparametrization until all output edge lengths agree to
    relative ``tol``; the fixed point makes the operation idempotent and the
    output exactly unit-speed in its own metric.  The output length equals
    the input length up to the O(1/N^2) corner cutting of smooth data
    (polygon-aligned vertices are preserved exactly).
    """
    if n_out < MIN_SAMPLES:
        raise CurveError(f"n_out < {MIN_SAMPLES}")
    if c.min_edge() == 0.0:
        raise CurveError("degenerate input: repeated points")
    cum = c.cum_lengths()
    total = cum[-1]
    s = np.arange(n_out) * (total / n_out)
    pts = _points_at(c, cum, s)
    for _ in range(max_iter):
        chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        spread = (chords.max() - chords.min()) / chords.mean()
        if spread < tol:
            break
        csum = np.concatenate([[0.0], np.cumsum(chords)])
        targets = np.arange(n_out) * (csum[-1] / n_out)
        # map equal-chord stations back to arc positions on the input
        s = np.interp(targets, csum, np.concatenate([s, [total]]))
        s[0] = 0.0
        pts = _points_at(c, cum, s)
    return Curve(pts)


def _points_at(c, cum, s):
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, c.n - 1)
    q = c.samples
    a = q[idx]
    b = q[(idx + 1) % c.n]
    seg = cum[idx + 1] - cum[idx]
    frac = (s - cum[idx]) / seg
    return a + frac[:, None] * (b - a)


# -- construction helpers ------------------------------------------------------

def circle(n, radius=1.0, center=(0.0, 0.0, 0.0), phase=0.0):
    """Regular n-gon inscribed in a round circle in the xy-plane."""
    t = 2.0 * np.pi * (np.arange(n) / n) + phase
    q = np.stack([radius * np.cos(t), radius * np.sin(t), np.zeros(n)], axis=1)
    return Curve(q + np.asarray(center, dtype=float))


# -- I/O -----------------------------------------------------------------------

def save_curve(c, path):
    """Write a curve as JSON (.json) or CSV with header x,y,z (.csv)."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z"])
            for row in c.samples:
                w.writerow([repr(float(v)) for v in row])
    else:
        with open(path, "w") as fh:
            json.dump({"closed": True, "samples": c.samples.tolist()}, fh)


def load_curve(path):
    """Read a curve saved by :func:`save_curve`; validates N and finiteness."""
    ext = os.path.splitext(path)[1].lower()
    try:
        if ext == ".csv":
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
            if not rows or [h.strip().lower() for h in rows[0]] != ["x", "y", "z"]:
                raise CurveError(f"{path}: expected header x,y,z")
            samples = [[float(v) for v in row] for row in rows[1:] if row]
        else:
            with open(path) as fh:
                data = json.load(fh)
            if not isinstance(data, dict) or "samples" not in data:
                raise CurveError(f"{path}: missing 'samples' field")
            samples = data["samples"]
        return Curve(np.asarray(samples, dtype=float))
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, CurveError):
            raise
        raise CurveError(f"{path}: malformed curve file ({exc})") from exc
