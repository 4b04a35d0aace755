import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capops.capacity import (Annulus, CapacityValue, Disk, GridSolverError, LogAnnuli, LogBox,
                             LogSublevel, LogUnion, MaskRegion, PolarProblem,
                             ToricCalibrationError, ToricTruncationError, Union,
                             ball_capacity_constant, capacity_disk_1d, capacity_product,
                             capacity_sublevel, capacity_toric_2d, capacity_toric_support,
                             capacity_upper_bound_ball, gamma_N, green_capacity_grid_1d,
                             parse_log_region, parse_planar, rate_from_capacity, read_mask,
                             write_mask)
from capops.capacity import toric
from capops.domains import Ball, Polydisk

GOLDEN = Path(__file__).parent / "golden"
DISK_HALF = 2 * math.pi / math.log(2)  # 9.0647...


class TestClosedForms:
    def test_sublevel_examples(self):
        assert capacity_sublevel(Polydisk(1), 0.5).cap == pytest.approx(9.0647, abs=1e-4)
        assert capacity_sublevel(Polydisk(2), 0.5).cap == pytest.approx(82.17, abs=0.01)
        assert capacity_sublevel(Ball(2), 0.5).provenance == "closed_form"
        with pytest.raises(ValueError):
            capacity_sublevel(1, 1.0)

    def test_sublevel_diverges_and_is_continuous(self):
        caps = [capacity_sublevel(2, 1 - 10.0**-k).cap for k in range(1, 8)]
        assert all(b > a for a, b in zip(caps, caps[1:]))
        assert caps[-1] > 1e14
        target = capacity_sublevel(2, 0.6).cap
        errs = [abs(capacity_sublevel(2, 0.6 - 2.0**-k).cap - target) for k in range(2, 30)]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-5

    @pytest.mark.parametrize("s", [k / 10 for k in range(1, 10)])
    def test_product_rule_matches_closed_form(self, s):
        one = capacity_sublevel(1, s)
        prod = capacity_product([one, one])
        assert prod.provenance == "product_rule"
        assert prod.cap == pytest.approx(capacity_sublevel(2, s).cap, rel=1e-15)

    def test_product_rule_edge_cases(self):
        one = capacity_sublevel(1, 0.3)
        assert capacity_product([one]) is one
        assert capacity_product([one, CapacityValue.infinite(1)]).is_infinite
        assert capacity_product([one, CapacityValue(0.0, 1, "closed_form")]).cap == 0.0
        with pytest.raises(ValueError):
            capacity_product([CapacityValue(0.0, 1, "closed_form"), CapacityValue.infinite(1)])
        a = CapacityValue(2.0, 1, "grid_1d", error_bar=0.02)
        b = CapacityValue(3.0, 1, "grid_1d", error_bar=0.06)
        p = capacity_product([a, b])
        assert p.N == 2
        assert p.error_bar == pytest.approx(6.0 * math.hypot(0.01, 0.02))

    def test_value_invariants(self):
        with pytest.raises(ValueError):
            CapacityValue(-1.0, 1, "closed_form")
        with pytest.raises(ValueError):
            CapacityValue(1.0, 1, "guess")
        c = capacity_sublevel(2, 0.5)
        assert c.tau == pytest.approx(c.cap / (2 * math.pi) ** 2)
        assert 0 < c.gamma < 1

    def test_gamma_examples(self):
        for r in (0.1, 0.5, 0.9):
            assert gamma_N(2 * math.pi / math.log(1 / r), 1) == pytest.approx(r, rel=1e-14)
        assert gamma_N(CapacityValue.infinite(3)) == 1.0
        s1, s2 = math.log(2), math.log(10 / 3)
        assert gamma_N((2 * math.pi) ** 2 / (s1 * s2), 2) == pytest.approx(
            math.exp(-math.sqrt(2 * s1 * s2)), rel=1e-14)
        c = capacity_sublevel(2, 0.3)
        assert rate_from_capacity(c) == pytest.approx(-math.log(c.gamma))

    @given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e6), st.integers(1, 4))
    def test_gamma_monotone(self, a, b, N):
        lo, hi = sorted((a, b))
        assert gamma_N(lo, N) <= gamma_N(hi, N)
        if hi > lo * (1 + 1e-9):
            assert gamma_N(lo, N) < gamma_N(hi, N) or gamma_N(hi, N) == 0.0

    def test_upper_bound(self):
        assert ball_capacity_constant(1) == pytest.approx(4 * math.pi)
        assert ball_capacity_constant(2) == pytest.approx(16 * 2 * math.pi**2 / 2)
        b = capacity_upper_bound_ball(0.5, 1)
        assert b.cap == pytest.approx(4 * math.pi / 0.5)
        assert b.provenance == "upper_bound_only"
        assert capacity_upper_bound_ball(1e-12, 1).cap > 1e12
        for r in np.linspace(0.01, 0.99, 100):
            assert capacity_upper_bound_ball(1 - r, 1).cap >= capacity_sublevel(1, r).cap

    def test_off_center_disk(self):
        c = capacity_disk_1d(0, 0.5)
        assert c.cap == pytest.approx(DISK_HALF, rel=1e-14)
        c = capacity_disk_1d(0.4, 0.2)
        # pseudo-hyperbolic radius from the two endpoints 0.2 and 0.6
        x1, x2 = 0.2, 0.6
        s = None
        for cc in np.linspace(0, 0.6, 600001):
            if abs((x2 - cc) / (1 - cc * x2) + (x1 - cc) / (1 - cc * x1)) < 1e-5:
                s = (x2 - cc) / (1 - cc * x2)
                break
        assert c.details["pseudo_radius"] == pytest.approx(s, rel=1e-4)
        assert capacity_disk_1d(0.4j, 0.2).cap == pytest.approx(c.cap)


class TestGrid1D:
    def test_disk_and_annulus(self):
        d = green_capacity_grid_1d(Disk(0, 0.5), 128)
        a = green_capacity_grid_1d(Annulus(0, 0.3, 0.5), 128)
        assert d.provenance == "grid_1d"
        assert d.cap == pytest.approx(DISK_HALF, rel=2e-3)
        assert abs(a.cap - d.cap) <= max(d.error_bar, 1e-9 * d.cap)
        assert abs(d.cap - DISK_HALF) < 3 * d.error_bar + 1e-12

    def test_second_order_convergence(self):
        errs = [abs(green_capacity_grid_1d(Disk(0, 0.5), R, richardson=False).cap - DISK_HALF)
                for R in (32, 64, 128)]
        assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3

    def test_off_center_disk_matches_closed_form(self):
        v = green_capacity_grid_1d(Disk(0.4, 0.2), 256)
        assert v.cap == pytest.approx(capacity_disk_1d(0.4, 0.2).cap, rel=0.02)

    def test_two_disks_subadditive_and_golden(self):
        u = Union((Disk(0.4, 0.2), Disk(-0.4, 0.2)))
        both = green_capacity_grid_1d(u, 256, richardson=False).cap
        one = green_capacity_grid_1d(Disk(0.4, 0.2), 256, richardson=False).cap
        assert one < both <= 2 * one
        golden = json.loads((GOLDEN / "two_disks_capacity.json").read_text())
        assert both == pytest.approx(golden["cap"], rel=1e-9)

    def test_monotone_in_set(self):
        caps = [green_capacity_grid_1d(Disk(0, r), 64, richardson=False).cap for r in (0.2, 0.3, 0.5)]
        assert caps == sorted(caps)

    def test_relaxation_monotone_and_bounded(self):
        prob = PolarProblem(Disk(0, 0.5), 16)
        snapshots = []
        u = prob.relax(tol=1e-10, callback=lambda k, v: snapshots.append(v.copy()))
        for a, b in zip(snapshots, snapshots[1:]):
            assert np.all(b >= a - 1e-15)
        assert u.min() >= -1 and u.max() <= 0
        assert np.all(u[prob.inK] == -1)
        direct = prob.solve_direct()
        np.testing.assert_allclose(u, direct, atol=1e-7)
        # discrete Green identity: mass on K equals flux through the circle
        assert prob.capacity(direct) == pytest.approx(prob.outer_flux(direct), rel=1e-10)

    def test_relax_budget_failure(self):
        prob = PolarProblem(Disk(0, 0.5), 16)
        with pytest.raises(GridSolverError) as exc:
            prob.relax(tol=1e-14, max_sweeps=5)
        assert exc.value.sweeps == 5 and exc.value.residual > 0

    def test_preconditions(self):
        with pytest.raises(ValueError):
            green_capacity_grid_1d(Disk(0, 0.99), 64)
        with pytest.raises(ValueError):
            green_capacity_grid_1d(Disk(0.53, 0.001), 16)  # no node inside

    def test_mask_file_roundtrip(self, tmp_path):
        n = 64
        y, x = np.mgrid[0:n, 0:n]
        cx, cy = -1 + (2 * x + 1) / n, 1 - (2 * y + 1) / n
        mask = (cx**2 + cy**2 <= 0.25).astype(np.uint8)
        write_mask(tmp_path / "k.mask", mask)
        text = (tmp_path / "k.mask").read_text().splitlines()
        assert text[0] == "mask v1" and text[1] == f"{n} {n}"
        region = read_mask(tmp_path / "k.mask")
        assert isinstance(region, MaskRegion)
        np.testing.assert_array_equal(region.mask, mask.astype(bool))
        v = green_capacity_grid_1d(region, 128)
        assert v.cap == pytest.approx(DISK_HALF, rel=0.06)
        assert isinstance(parse_planar(f"mask:{tmp_path / 'k.mask'}"), MaskRegion)

    def test_parse_planar(self):
        assert parse_planar("disk:0:0.5") == Disk(0, 0.5)
        assert parse_planar("annulus:0.1:0.2:0.3") == Annulus(0.1, 0.2, 0.3)
        assert isinstance(parse_planar("disk:0.4:0.2; disk:-0.4:0.2"), Union)
        with pytest.raises(ValueError):
            parse_planar("square:1")


class TestToric:
    def test_calibration(self):
        assert abs(toric.calibrate()) < 1e-10
        v = capacity_toric_2d(LogSublevel(0.5))
        assert v.provenance == "toric_2d"
        assert v.cap == pytest.approx((2 * math.pi) ** 2 / math.log(2) ** 2, rel=0.03)

    def test_product_box(self):
        box = LogAnnuli(0.2, 0.5, 0.1, 0.7)
        v = capacity_toric_2d(box)
        expect = 2 * math.pi / math.log(2) * 2 * math.pi / math.log(1 / 0.7)
        assert v.cap == pytest.approx(expect, rel=0.03)

    def test_union_matches_support_oracle(self):
        u = LogUnion((LogBox(-math.inf, -0.3, -math.inf, -1.5), LogBox(-math.inf, -1.5, -math.inf, -0.4)))
        v = capacity_toric_2d(u)
        assert v.cap == pytest.approx(capacity_toric_support(u).cap, rel=1e-6)
        # union dominates each part and is dominated by the hull's capacity bound
        for p in u.parts:
            assert v.cap >= capacity_toric_support(p).cap

    def test_shrinking_toward_origin(self):
        caps = [capacity_toric_2d(LogBox(-math.inf, -0.5 * k, -math.inf, -0.3 * k),
                                  truncation=4 * k, resolution=10).cap for k in (1, 2, 4, 8)]
        assert all(b < a for a, b in zip(caps, caps[1:]))
        assert caps[-1] / caps[0] == pytest.approx(1 / 64, rel=1e-6)

    def test_field_bounds(self):
        v = capacity_toric_2d(LogSublevel(0.4), resolution=20)
        f = v.details["field"].values
        assert f.min() >= -1 and f.max() <= 0
        assert np.all(np.diff(f, axis=0) >= -1e-12) and np.all(np.diff(f, axis=1) >= -1e-12)

    def test_truncation_refusal(self):
        with pytest.raises(ToricTruncationError):
            capacity_toric_2d(LogSublevel(0.5), truncation=0.7, verify_calibration=False)

    def test_calibration_failure_aborts(self, monkeypatch):
        monkeypatch.setattr(toric, "NORMALIZATION", toric.NORMALIZATION * 1.1)
        monkeypatch.setattr(toric, "_calibrated", {})
        with pytest.raises(ToricCalibrationError):
            capacity_toric_2d(LogSublevel(0.3))

    def test_parse_log_region(self):
        assert parse_log_region("sublevel:0.5") == LogSublevel(0.5)
        assert isinstance(parse_log_region("sublevel:0.5; annuli:0.1,0.2,0.1,0.8"), LogUnion)
        with pytest.raises(ValueError):
            parse_log_region("ball:1")
