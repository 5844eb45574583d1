import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from knotgauge.curve import (Curve, CurveError, circle, discrete_tangent,
                             hausdorff_distance, load_curve, param_distance,
                             resample_arclength, save_curve)
from util import fourier_curve, rigid_moved


def test_needs_min_samples():
    with pytest.raises(CurveError, match="N <"):
        Curve(np.random.default_rng(0).normal(size=(3, 3)))


def test_rejects_repeated_consecutive():
    q = circle(16).samples.copy()
    q[5] = q[4]
    with pytest.raises(CurveError, match="coincide"):
        Curve(q)


def test_rejects_nonfinite():
    q = circle(16).samples.copy()
    q[3, 1] = np.nan
    with pytest.raises(CurveError, match="finite"):
        Curve(q)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_param_distance_range_and_symmetry(s, t):
    d = param_distance(s, t)
    assert 0.0 <= d <= 0.5 + 1e-12
    assert d == pytest.approx(param_distance(t, s), abs=1e-12)


def test_param_distance_examples():
    assert param_distance(0.1, 0.9) == pytest.approx(0.2)
    assert param_distance(0.25, 0.75) == pytest.approx(0.5)


class TestIntrinsicDistance:
    def test_antipodal_circle(self):
        c = circle(1000)
        L = c.total_length()
        assert c.intrinsic_distance(0, 500) == pytest.approx(0.5 * L, rel=1e-12)
        assert L == pytest.approx(2 * math.pi, rel=1e-4)

    def test_identity(self, trefoil512):
        assert trefoil512.intrinsic_distance(17, 17) == 0.0

    def test_quarter_of_unit_length(self):
        c = circle(256)
        c = Curve(c.samples / c.total_length())
        c = resample_arclength(c, 256)
        assert c.intrinsic_distance(0, 64) == pytest.approx(0.25, abs=1e-9)

    def test_chord_lower_bound_and_triangle(self, trefoil512):
        rng = np.random.default_rng(1)
        d = trefoil512.intrinsic_matrix()
        ch = trefoil512.chord_matrix()
        assert np.all(d >= ch - 1e-9)
        for _ in range(200):
            i, j, k = rng.integers(0, trefoil512.n, size=3)
            assert d[i, j] <= d[i, k] + d[k, j] + 1e-12


class TestHausdorff:
    def test_identical(self, trefoil512):
        assert hausdorff_distance(trefoil512, trefoil512) == 0.0

    def test_concentric_radial_offset(self):
        d = 1e-4
        a = circle(2048)
        b = circle(2048, radius=1.0 + d)
        assert hausdorff_distance(a, b) == pytest.approx(d, abs=1e-9)

    def test_translation(self):
        a = circle(2048)
        b = Curve(a.samples + np.array([0.3, 0.0, 0.0]))
        got = hausdorff_distance(a, b)
        # brute-force vertex-to-vertex oracle
        diff = a.samples[:, None, :] - b.samples[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        oracle = max(dist.min(axis=1).max(), dist.min(axis=0).max())
        assert got == pytest.approx(0.3, abs=2e-3)
        assert got <= oracle + 1e-12

    def test_symmetry_and_triangle(self):
        a = fourier_curve(0, n=128)
        b = fourier_curve(1, n=96)
        c = fourier_curve(2, n=112)
        assert hausdorff_distance(a, b) == hausdorff_distance(b, a)
        assert (hausdorff_distance(a, c)
                <= hausdorff_distance(a, b) + hausdorff_distance(b, c) + 1e-12)


class TestResample:
    def test_arc_spacing_equal(self):
        c = fourier_curve(3, n=200)
        out = resample_arclength(c, 128)
        assert out.n == 128
        # vertices on the input polyline: distance to it is ~0
        from knotgauge.curve import points_to_polyline_distance
        d = points_to_polyline_distance(out.samples, c)
        assert d.max() < 1e-12
        # length as measured along the input is preserved by construction;
        # the output polygon length is shorter only by corner cutting
        assert out.total_length() <= c.total_length() + 1e-12
        assert out.total_length() == pytest.approx(c.total_length(), rel=1e-3)

    def test_chord_edges_equal(self):
        out = resample_arclength(circle(512), 256)
        e = out.edge_lengths()
        assert (e.max() - e.min()) / e.mean() < 1e-10
        assert np.allclose(e, out.total_length() / 256, rtol=1e-10)

    def test_idempotent(self):
        c = resample_arclength(fourier_curve(4, n=300), 256)
        again = resample_arclength(c, 256)
        disp = np.linalg.norm(c.samples - again.samples, axis=1).max()
        assert disp < 1e-9

    def test_too_few(self, circle64):
        with pytest.raises(CurveError):
            resample_arclength(circle64, 4)


def test_discrete_tangent_unit(trefoil512):
    u = discrete_tangent(trefoil512)
    assert np.allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-14)


class TestIO:
    def test_json_roundtrip(self, tmp_path, circle64):
        p = tmp_path / "c.json"
        save_curve(circle64, str(p))
        back = load_curve(str(p))
        assert np.array_equal(back.samples, circle64.samples)
        data = json.loads(p.read_text())
        assert data["closed"] is True

    def test_csv_roundtrip(self, tmp_path):
        c = fourier_curve(5, n=128)
        p = tmp_path / "c.csv"
        save_curve(c, str(p))
        back = load_curve(str(p))
        assert back.n == 128
        assert np.array_equal(back.samples, c.samples)

    def test_too_few_samples_file(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"closed": True,
                                 "samples": [[0, 0, 0], [1, 0, 0], [0, 1, 0]]}))
        with pytest.raises(CurveError, match="N <"):
            load_curve(str(p))

    def test_malformed(self, tmp_path):
        p = tmp_path / "junk.json"
        p.write_text("{not json")
        with pytest.raises(CurveError, match="malformed"):
            load_curve(str(p))

    def test_csv_header_required(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(CurveError, match="header"):
            load_curve(str(p))


def test_rigid_motion_preserves_metrics(trefoil512):
    moved = rigid_moved(trefoil512, seed=9)
    assert np.allclose(moved.edge_lengths(), trefoil512.edge_lengths(),
                       atol=1e-12)
    assert moved.intrinsic_distance(3, 77) == pytest.approx(
        trefoil512.intrinsic_distance(3, 77), abs=1e-12)
