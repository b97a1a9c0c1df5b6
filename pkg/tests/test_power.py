import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpctwin.config import DC_380V, SMART_STAGING, LossModelParams, SystemConfig
from hpctwin.power import (
    PowerModel,
    conversion,
    cooling_feed,
    node_power,
    rack_power,
    rectifier_efficiency,
    staged_rectifier_efficiency,
    system_power,
)

# Component sums from the reference power table:
#   idle: 90 + 4*88 + 4*20 + 74 + 2*15
#   peak: 280 + 4*560 + 80 + 74 + 30
IDLE_NODE_W = 626.0
PEAK_NODE_W = 2704.0
# 90 + 0.33*190 + 4*(88 + 0.79*472) + 80 + 74 + 30
HPL_NODE_W = 2180.22


class TestNodePower:
    def test_idle(self, frontier):
        assert node_power(0.0, 0.0, frontier.power) == IDLE_NODE_W

    def test_peak(self, frontier):
        assert node_power(1.0, 1.0, frontier.power) == PEAK_NODE_W

    def test_benchmark_core_phase(self, frontier):
        assert node_power(0.33, 0.79, frontier.power) == pytest.approx(HPL_NODE_W, abs=1e-9)

    def test_vectorized_matches_scalar(self, frontier):
        cpu = np.array([0.0, 0.33, 1.0])
        gpu = np.array([0.0, 0.79, 1.0])
        out = node_power(cpu, gpu, frontier.power)
        assert out == pytest.approx([IDLE_NODE_W, HPL_NODE_W, PEAK_NODE_W])

    @given(c1=st.floats(0, 1), c2=st.floats(0, 1), g=st.floats(0, 1))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_cpu(self, c1, c2, g):
        table = SystemConfig().power
        lo, hi = sorted((c1, c2))
        assert node_power(lo, g, table) <= node_power(hi, g, table) + 1e-9

    @given(c=st.floats(0, 1), g1=st.floats(0, 1), g2=st.floats(0, 1))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_gpu(self, c, g1, g2):
        table = SystemConfig().power
        lo, hi = sorted((g1, g2))
        assert node_power(c, lo, table) <= node_power(c, hi, table) + 1e-9


class TestConversion:
    def test_nominal_efficiency_product(self):
        # 0.96 * 0.98 = 0.9408, roughly 0.94
        assert 0.96 * 0.98 == pytest.approx(0.94, abs=0.001)

    def test_inverted_loss_example(self, frontier):
        # Fix the curve flat so eta is exactly 0.96*0.98.
        lm = LossModelParams(rectifier_eff_curve=((0.0, 0.96), (20000.0, 0.96)))
        res = conversion(94080.0, 40000.0, lm)
        assert res.eta == pytest.approx(0.9408)
        assert res.p_in_w == pytest.approx(100000.0)
        assert res.loss_w == pytest.approx(5920.0)

    def test_lossless_limit(self):
        lm = LossModelParams(
            rectifier_eff_curve=((0.0, 1.0), (20000.0, 1.0)),
            sivoc_eff_nominal=1.0,
        )
        res = conversion(5000.0, 20000.0, lm)
        assert res.loss_w == pytest.approx(0.0)
        assert res.p_in_w == pytest.approx(5000.0)

    def test_loss_positive_whenever_eta_below_one(self, frontier):
        for p_out in (10.0, 1e3, 1e5):
            res = conversion(p_out, 4 * 5000.0, frontier.loss_model)
            assert res.eta < 1.0
            assert res.p_in_w > p_out
            assert res.loss_w == pytest.approx(res.p_in_w - p_out)

    def test_dc_mode_flat(self, frontier):
        lm = LossModelParams(mode=DC_380V)
        for load in (0.0, 1e4, 4e4):
            res = conversion(1000.0, load, lm)
            assert res.eta == pytest.approx(0.973)

    def test_negative_power_rejected(self, frontier):
        with pytest.raises(ValueError):
            conversion(-1.0, 0.0, frontier.loss_model)


class TestEfficiencyCurve:
    def test_knots_and_flat_extrapolation(self, frontier):
        lm = frontier.loss_model
        for load, eff in lm.rectifier_eff_curve:
            assert rectifier_efficiency(load, lm) == pytest.approx(eff)
        first, last = lm.rectifier_eff_curve[0], lm.rectifier_eff_curve[-1]
        assert rectifier_efficiency(0.0, lm) == pytest.approx(first[1])
        assert rectifier_efficiency(last[0] * 3, lm) == pytest.approx(last[1])

    def test_monotone_up_to_peak(self, frontier):
        lm = frontier.loss_model
        loads = np.linspace(0, 7500, 400)
        effs = rectifier_efficiency(loads, lm)
        assert np.all(np.diff(effs) >= -1e-12)


class TestSmartStaging:
    def test_dominates_baseline(self, frontier):
        lm = frontier.loss_model
        loads = np.linspace(1.0, 45000.0, 500)
        staged, _ = staged_rectifier_efficiency(loads, lm)
        baseline = rectifier_efficiency(loads / 4.0, lm)
        assert np.all(staged >= baseline - 1e-12)

    def test_capacity_respected(self, frontier):
        lm = frontier.loss_model
        loads = np.linspace(1.0, 4 * lm.rectifier_rated_w, 300)
        _, n = staged_rectifier_efficiency(loads, lm)
        assert np.all(n * lm.rectifier_rated_w >= loads - 1e-9)

    def test_argmax_invariant_under_curve_scaling(self, frontier):
        lm = frontier.loss_model
        loads = np.linspace(100.0, 42000.0, 211)
        _, n_ref = staged_rectifier_efficiency(loads, lm)
        for scale in (0.5, 0.9, 0.99):
            scaled = LossModelParams(
                rectifier_eff_curve=tuple((x, y * scale) for x, y in lm.rectifier_eff_curve),
                rectifier_rated_w=lm.rectifier_rated_w,
            )
            _, n_s = staged_rectifier_efficiency(loads, scaled)
            assert np.array_equal(n_ref, n_s)

    def test_single_rectifier_at_sweet_spot(self, frontier):
        # A 7.5 kW chassis load runs best on exactly one rectifier.
        eff, n = staged_rectifier_efficiency(7500.0, frontier.loss_model)
        assert n == 1
        assert eff == pytest.approx(0.963)


class TestRackAndSystem:
    def test_idle_rack_with_nominal_losses(self, frontier):
        # 128 * (626 / 0.9408) + 32 * 250
        node_in = np.full(128, IDLE_NODE_W / 0.9408)
        expect = 128 * (IDLE_NODE_W / 0.9408) + 8000.0
        assert expect == pytest.approx(93170.07, abs=0.5)
        assert rack_power(node_in, frontier.power) == pytest.approx(expect)

    def test_empty_rack_is_switch_floor(self, frontier):
        assert rack_power([], frontier.power) == 8000.0

    def test_single_peak_node(self, frontier):
        got = rack_power([PEAK_NODE_W / 0.9408], frontier.power)
        assert got == pytest.approx(PEAK_NODE_W / 0.9408 + 8000.0)

    def test_zero_racks_pump_floor(self, frontier):
        sample = system_power([], frontier)
        assert sample.p_system_w == pytest.approx(217500.0)

    def test_cdu_grouping(self, frontier):
        racks = np.arange(74, dtype=float)
        sample = system_power(racks, frontier)
        assert sample.p_cdu_group_w[0] == pytest.approx(0 + 1 + 2)
        assert sample.p_cdu_group_w[24] == pytest.approx(72 + 73)
        assert sample.p_system_w == pytest.approx(racks.sum() + 217500.0)

    def test_system_sample_invariants(self, frontier):
        model = PowerModel(frontier)
        rng = np.random.default_rng(3)
        cpu = rng.random(frontier.topology.nodes_total)
        gpu = rng.random(frontier.topology.nodes_total)
        s = model.sample(cpu, gpu)
        assert s.p_system_w == pytest.approx(
            s.p_cdu_group_w.sum() + 25 * frontier.power.cdu_pump_w)
        assert s.loss_total_w == pytest.approx(s.loss_rectifier_w + s.loss_sivoc_w)
        assert s.loss_total_w >= 0
        assert 0 < s.eta_system <= 1


class TestCoolingFeed:
    def test_reference_factor(self):
        assert cooling_feed(1e6, 0.945) == pytest.approx(945000.0)

    def test_zero(self):
        assert cooling_feed(0.0, 0.945) == 0.0

    def test_identity_factor(self):
        heats = cooling_feed(np.array([1.0, 2.0]), 1.0)
        assert heats == pytest.approx([1.0, 2.0])


class TestCompositionAgainstOps:
    def test_pipeline_matches_op_by_op(self, tiny):
        """The vectorized pipeline must equal the op composition: node_power,
        per-chassis conversion, rack sums, system grouping."""
        cfg = tiny
        topo = cfg.topology
        rng = np.random.default_rng(11)
        cpu = rng.random(topo.nodes_total)
        gpu = rng.random(topo.nodes_total)

        model = PowerModel(cfg)
        fast = model.sample(cpu, gpu)

        lm = cfg.loss_model
        npc = topo.nodes_per_chassis
        n_chassis = topo.nodes_total // npc
        switch_per_chassis = topo.switches_per_rack * cfg.power.switch_avg_w / topo.chassis_per_rack
        rack_in = np.zeros(topo.num_racks)
        for ch in range(n_chassis):
            ids = range(ch * npc, (ch + 1) * npc)
            p_nodes = sum(node_power(cpu[i], gpu[i], cfg.power) for i in ids)
            dc_load = p_nodes / lm.sivoc_eff_nominal + switch_per_chassis
            eta_r = rectifier_efficiency(dc_load / 4.0, lm)
            rack_in[ch * npc // topo.nodes_per_rack] += dc_load / eta_r
        slow = system_power(rack_in, cfg)
        assert fast.p_system_w == pytest.approx(slow.p_system_w, rel=1e-12)
        assert fast.p_cdu_group_w == pytest.approx(slow.p_cdu_group_w, rel=1e-12)

    def test_fixed_summation_determinism(self, frontier):
        model = PowerModel(frontier)
        rng = np.random.default_rng(5)
        cpu = rng.random(frontier.topology.nodes_total)
        gpu = rng.random(frontier.topology.nodes_total)
        a = model.sample(cpu, gpu)
        b = model.sample(cpu.copy(), gpu.copy())
        assert a.p_system_w == b.p_system_w
        assert np.array_equal(a.p_cdu_group_w, b.p_cdu_group_w)
