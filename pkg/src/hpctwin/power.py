"""Dynamic power with rectification and DC-DC conversion losses.

Power is built bottom-up each tick: node power from CPU/GPU utilization,
conversion losses applied per chassis (four rectifiers share each chassis
DC bus), switch power on the rack bus, rack sums grouped per CDU, and a
constant pump cost per CDU on top. Evaluation order is fixed so results
are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import (
    AC_BASELINE,
    DC_380V,
    SMART_STAGING,
    ComponentPowerTable,
    LossModelParams,
    SystemConfig,
)


@dataclass
class PowerSample:
    """System power state at one tick, input-side (losses included)."""

    time_s: float
    p_node_w: np.ndarray | None
    p_rack_w: np.ndarray
    p_cdu_group_w: np.ndarray
    p_system_w: float
    p_output_w: float
    loss_rectifier_w: float
    loss_sivoc_w: float
    loss_total_w: float
    eta_system: float
    rectifiers_active: int = 0
    saturated_chassis: int = 0


class ConversionResult(NamedTuple):
    p_in_w: float
    loss_w: float
    eta: float


def node_power(cpu_util, gpu_util, table: ComponentPowerTable):
    """Node wattage at the 48 V bus: CPU and GPUs interpolate linearly
    between idle and max, the rest draw fixed averages. Accepts scalars
    or arrays."""
    cpu = table.cpu_idle_w + np.asarray(cpu_util) * (table.cpu_max_w - table.cpu_idle_w)
    gpu = table.gpu_idle_w + np.asarray(gpu_util) * (table.gpu_max_w - table.gpu_idle_w)
    fixed = (
        table.nics_per_node * table.nic_unit_w
        + table.ram_avg_w
        + table.nvme_per_node * table.nvme_unit_w
    )
    out = cpu + table.gpus_per_node * gpu + fixed
    return float(out) if np.ndim(out) == 0 else out


def rectifier_efficiency(load_per_rectifier_w, params: LossModelParams):
    """Piecewise-linear efficiency vs per-rectifier load, flat beyond the
    configured knots."""
    xs = np.array([p[0] for p in params.rectifier_eff_curve])
    ys = np.array([p[1] for p in params.rectifier_eff_curve])
    eff = np.interp(load_per_rectifier_w, xs, ys)
    return float(eff) if np.ndim(load_per_rectifier_w) == 0 else eff


def staged_rectifier_efficiency(chassis_load_w, params: LossModelParams):
    """Best achievable rectifier efficiency when the controller may run any
    n in 1..4 rectifiers, subject to n * rated capacity covering the load.

    Returns (efficiency, active_count). Loads beyond full capacity fall back
    to all four rectifiers (saturation is flagged by the caller).
    """
    load = np.atleast_1d(np.asarray(chassis_load_w, dtype=float))
    best_eff = np.full(load.shape, -np.inf)
    best_n = np.full(load.shape, 4, dtype=np.int64)
    for n in (1, 2, 3, 4):
        feasible = load <= n * params.rectifier_rated_w
        eff = rectifier_efficiency(load / n, params)
        better = feasible & (eff > best_eff)
        best_eff = np.where(better, eff, best_eff)
        best_n = np.where(better, n, best_n)
    # Saturated chassis: nothing feasible, run everything.
    saturated = ~np.isfinite(best_eff)
    best_eff = np.where(saturated, rectifier_efficiency(load / 4, params), best_eff)
    best_n = np.where(saturated, 4, best_n)
    if np.ndim(chassis_load_w) == 0:
        return float(best_eff[0]), int(best_n[0])
    return best_eff, best_n


def conversion(p_out_w: float, chassis_load_w: float, params: LossModelParams) -> ConversionResult:
    """Map delivered power back to input power through the conversion chain.

    chassis_load_w is the DC-bus load used for the efficiency lookup; in the
    baseline mode it is spread over all four rectifiers.
    """
    if p_out_w < 0:
        raise ValueError("p_out_w must be >= 0")
    if params.mode == DC_380V:
        eta = params.dc_mode_efficiency
    else:
        if params.mode == SMART_STAGING:
            eta_r, _ = staged_rectifier_efficiency(chassis_load_w, params)
        else:
            eta_r = rectifier_efficiency(chassis_load_w / 4.0, params)
        eta = eta_r * params.sivoc_eff_nominal
    p_in = p_out_w / eta
    return ConversionResult(p_in_w=p_in, loss_w=p_in - p_out_w, eta=eta)


def rack_power(node_powers_in_w, table: ComponentPowerTable, switches_per_rack: int = 32) -> float:
    """Rack total from already-converted node powers plus the network switches."""
    return float(np.sum(node_powers_in_w) + switches_per_rack * table.switch_avg_w)


def system_power(
    rack_powers_w,
    config: SystemConfig,
    time_s: float = 0.0,
    loss_rectifier_w: float = 0.0,
    loss_sivoc_w: float = 0.0,
    p_output_w: float | None = None,
) -> PowerSample:
    """Group rack powers per CDU and add the constant CDU pump cost."""
    topo = config.topology
    racks = np.asarray(rack_powers_w, dtype=float)
    cdu_idx = np.arange(racks.size) // topo.racks_per_cdu
    if racks.size and cdu_idx[-1] >= topo.num_cdus:
        raise ValueError(f"got {racks.size} racks but topology holds {topo.num_cdus} CDU groups")
    groups = np.bincount(cdu_idx, weights=racks, minlength=topo.num_cdus)
    pumps = topo.num_cdus * config.power.cdu_pump_w
    total = float(groups.sum() + pumps)
    loss_total = loss_rectifier_w + loss_sivoc_w
    if p_output_w is None:
        p_output_w = float(groups.sum()) - loss_total
    conv_in = float(groups.sum())
    eta = p_output_w / conv_in if conv_in > 0 else 1.0
    return PowerSample(
        time_s=time_s,
        p_node_w=None,
        p_rack_w=racks,
        p_cdu_group_w=groups,
        p_system_w=total,
        p_output_w=p_output_w,
        loss_rectifier_w=loss_rectifier_w,
        loss_sivoc_w=loss_sivoc_w,
        loss_total_w=loss_total,
        eta_system=eta,
    )


def cooling_feed(p_cdu_group_w, cooling_efficiency: float):
    """Heat handed to the cooling model: electrical power scaled by the
    fraction that actually reaches the coolant."""
    return np.asarray(p_cdu_group_w, dtype=float) * cooling_efficiency


class PowerModel:
    """Vectorized per-tick power pipeline over the whole machine.

    The per-node path is: utilization -> node watts at 48 V -> chassis DC-bus
    load (nodes through the SIVOC stage, switches directly on the bus when
    configured) -> rectifier efficiency per chassis -> AC input. Summation
    order is fixed (node -> chassis -> CDU) so identical inputs always
    produce identical samples.
    """

    def __init__(self, config: SystemConfig):
        self.config = config
        topo = config.topology
        self.n_nodes = topo.nodes_total
        self.nodes_per_chassis = topo.nodes_per_chassis
        self.n_chassis = -(-self.n_nodes // self.nodes_per_chassis)
        self.n_racks = topo.num_racks
        self._chassis_of_node = np.arange(self.n_nodes) // self.nodes_per_chassis
        self._rack_of_chassis = (
            np.arange(self.n_chassis) * self.nodes_per_chassis
        ) // topo.nodes_per_rack
        self._switch_w_per_chassis = (
            topo.switches_per_rack * config.power.switch_avg_w / topo.chassis_per_rack
        )
        curve = config.loss_model.rectifier_eff_curve
        self._curve_x = np.array([p[0] for p in curve])
        self._curve_y = np.array([p[1] for p in curve])

    def _rect_eff(self, load_per_rect: np.ndarray) -> np.ndarray:
        return np.interp(load_per_rect, self._curve_x, self._curve_y)

    def sample(self, cpu_util: np.ndarray, gpu_util: np.ndarray, time_s: float = 0.0,
               keep_node_powers: bool = False) -> PowerSample:
        cfg = self.config
        lm = cfg.loss_model
        p_node = node_power(cpu_util, gpu_util, cfg.power)
        node_sum_per_chassis = np.bincount(
            self._chassis_of_node, weights=p_node, minlength=self.n_chassis
        )
        sivoc_in = node_sum_per_chassis / lm.sivoc_eff_nominal
        switch_w = self._switch_w_per_chassis

        if lm.mode == DC_380V:
            chassis_out = node_sum_per_chassis + switch_w
            chassis_in = chassis_out / lm.dc_mode_efficiency
            loss_rect = float(chassis_in.sum() - chassis_out.sum())
            loss_sivoc = 0.0
            rect_active = 0
            saturated = 0
        else:
            if lm.switches_on_dc_bus:
                dc_load = sivoc_in + switch_w
            else:
                dc_load = sivoc_in
            if lm.mode == SMART_STAGING:
                eta_r, n_active = staged_rectifier_efficiency(dc_load, lm)
                rect_active = int(np.sum(n_active))
            else:
                eta_r = self._rect_eff(dc_load / 4.0)
                rect_active = 4 * self.n_chassis
            rect_in = dc_load / eta_r
            chassis_in = rect_in if lm.switches_on_dc_bus else rect_in + switch_w
            saturated = int(np.sum(dc_load > 4 * lm.rectifier_rated_w))
            loss_rect = float(rect_in.sum() - dc_load.sum())
            loss_sivoc = float(sivoc_in.sum() - node_sum_per_chassis.sum())

        rack_in = np.bincount(self._rack_of_chassis, weights=chassis_in, minlength=self.n_racks)
        p_output = float(node_sum_per_chassis.sum() + switch_w * self.n_chassis)
        sample = system_power(
            rack_in,
            cfg,
            time_s=time_s,
            loss_rectifier_w=loss_rect,
            loss_sivoc_w=loss_sivoc,
            p_output_w=p_output,
        )
        sample.rectifiers_active = rect_active
        sample.saturated_chassis = saturated
        if keep_node_powers:
            sample.p_node_w = p_node
        return sample
