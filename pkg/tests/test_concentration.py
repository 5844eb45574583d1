import math

import numpy as np
import pytest

from knotgauge.concentration import (EPSILON, ConcentrationError,
                                     detect_concentrations,
                                     offdiag_window_mass, pipeline,
                                     select_scale)
from knotgauge.curve import param_distance
from knotgauge.sobolev import bilip_constant
from knotgauge.substitution import SubstitutionError, theta4
from util import curve_from_angles, kinked_track


def test_epsilon_value():
    assert EPSILON == pytest.approx(2 / 3 - 6 / math.pi**2, abs=1e-15)
    # the distortion bound the quantum is tuned for: 1/sqrt(1-3eps/2) = pi/3
    assert 1 / math.sqrt(1 - 1.5 * EPSILON) == pytest.approx(math.pi / 3,
                                                             abs=1e-12)


def twist_track(n=2048, width=8):
    """Track with a full 360-degree tangent twist over ``width`` edges."""
    half = n // 2
    m = int(0.42 * half)
    base = np.zeros(half)
    s = np.linspace(0.0, 1.0, half - m, endpoint=False)
    base[m:] = np.pi * (3 * s**2 - 2 * s**3)
    k0 = m // 2
    prof = np.linspace(0.0, 1.0, width, endpoint=False)
    base[k0:k0 + width] = 2 * math.pi * prof**2  # nonuniform spin: stays embedded
    return curve_from_angles(np.concatenate([base, base + np.pi])), k0 / n


class TestDetect:
    def test_smooth_circle_empty(self, circle512):
        det = detect_concentrations(circle512)
        assert det.indices == []

    def test_smooth_trefoil_empty(self, trefoil512):
        assert detect_concentrations(trefoil512).indices == []

    def test_twist_detected(self):
        c, x = twist_track(2048)
        det = detect_concentrations(c)
        assert det.indices, "twist not detected"
        dists = [param_distance(p, x) for p in det.params]
        assert min(dists) < 8 / 2048

    def test_symmetric_orbit_detected(self):
        c, _, x = kinked_track(2048, chi=0.7)
        det = detect_concentrations(c)
        assert len(det.indices) == 2
        ds = sorted(param_distance(p, x) for p in det.params)
        assert ds[0] < 4 / 2048
        assert abs(ds[1] - 0.5) < 4 / 2048

    def test_cardinality_bound(self):
        c, _, _ = kinked_track(2048, chi=0.7)
        det = detect_concentrations(c)
        assert len(det.indices) <= det.cardinality_bound

    def test_offdiagonal_decay(self):
        c, _, _ = kinked_track(2048, chi=0.7)
        rng = np.random.default_rng(0)
        n = c.n
        for _ in range(100):
            i, j = rng.integers(0, n, size=2)
            gap = param_distance(i / n, j / n)
            if gap < 0.05:
                continue
            r = rng.uniform(2 / n, gap / 4)
            mass = offdiag_window_mass(c, int(i), int(j), r)
            assert mass <= 64 * r**2 / gap**2 + 1e-12


class TestSelectScale:
    def test_kinked_track_scale(self):
        c, _, x = kinked_track(2048, chi=0.7)
        det = detect_concentrations(c)
        L = bilip_constant(c)
        sel = select_scale(c, det, p=2, L=L)
        assert sel.r_bar > 0
        assert sel.r_bar <= 1 / 8  # symmetry bound for p=2
        assert sel.annulus_scale is not None
        # the annuli around the kink representative carry exactly zero mass
        # up to the reported prefix scale, despite the O(1) kink inside
        assert sel.theta == pytest.approx(theta4(L))

    def test_requires_detection(self, circle512):
        det = detect_concentrations(circle512)
        with pytest.raises(ConcentrationError):
            select_scale(circle512, det, p=2, L=bilip_constant(circle512))


class TestPipeline:
    def test_concentration_free_passthrough(self, trefoil512):
        rep = pipeline(trefoil512, p=3)
        assert rep.detection.indices == []
        assert rep.modified is trefoil512
        assert rep.all_pass

    def test_concentration_free_with_reference(self, trefoil512):
        rep = pipeline(trefoil512, p=3, reference=trefoil512)
        assert rep.all_pass
        assert rep.certificate is not None and rep.certificate.passed

    def test_reference_size_mismatch(self, trefoil512):
        from knotgauge.curve import circle
        with pytest.raises(ConcentrationError, match="sample count"):
            pipeline(trefoil512, p=3, reference=circle(256))

    def test_good_set_gate_blocks_at_desk_resolution(self):
        # the smallness prescribed for bilipschitz control makes the good-set
        # threshold theta^(1/4) ~ (768 L)^-2; a detectable defect forces the
        # maximal excess near the endpoints to ~|kink mass|/r ~ 1/(N r),
        # which cannot drop below that threshold until N ~ 1e8.  The
        # pipeline must therefore report the good-set failure honestly.
        c, ref, _ = kinked_track(2048, chi=0.7)
        with pytest.raises(SubstitutionError, match="no good endpoints"):
            pipeline(c, p=2, reference=ref)
