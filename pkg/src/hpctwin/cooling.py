"""Transient lumped-parameter model of the three cooling loops.

Three loops joined by heat exchangers: 25 CDU-rack (secondary) loops, the
primary high-temperature-water loop, and the cooling-tower loop. Each loop
segment is a stirred thermal volume obeying

    C * dT/dt = m_dot * c * (T_in - T) + H_in - Q_out

heat exchangers use the effectiveness form Q = eps * min(m_dot*c) * dT_inlets,
and the tower outlet approaches the outdoor wet-bulb temperature. PID
controllers set pump, valve, and fan commands once per 15 s step; discrete
staging of pumps, heat exchangers, and tower cells runs after the PIDs with
hysteresis and hold times. Integration is explicit Euler with 1 s internal
sub-steps and a stability guard.

One stepper serves one run; `step` is a pure function of (state, inputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import CoolingParams, SystemConfig

GPM_TO_M3S = 6.30902e-5


class CoolingError(RuntimeError):
    """Cooling state became invalid (non-finite or unstable)."""


def heat_extracted(rho_kg_m3: float, flow_m3_s: float, delta_t_c: float,
                   c_j_kg_c: float) -> float:
    """Heat carried by a coolant stream across a temperature differential."""
    if min(rho_kg_m3, flow_m3_s, delta_t_c, c_j_kg_c) < 0:
        raise ValueError("heat_extracted arguments must be >= 0")
    return rho_kg_m3 * flow_m3_s * delta_t_c * c_j_kg_c


def compute_pue(p_system_w: float, aux_w: float) -> float:
    """Facility power over IT power; aux covers CDU pumps, primary and
    tower-loop pumps, and tower fans."""
    if p_system_w <= 0:
        raise ValueError("p_system_w must be positive")
    return (p_system_w + aux_w) / p_system_w


def volume_temperature_step(t_c, heat_w, flow_kg_s, t_in_c, capacity_j_c,
                            dt_s, c_j_kg_c):
    """Advance one stirred thermal volume by one explicit-Euler sub-step.

    heat_w is the net non-flow heat (sources positive, heat-exchanger
    extraction negative). Works elementwise on arrays.
    """
    dT = (flow_kg_s * c_j_kg_c * (t_in_c - t_c) + heat_w) / capacity_j_c * dt_s
    return t_c + dT


@dataclass
class PidController:
    """PI(D) controller with output limiting and integral anti-windup.

    The integral accumulator stores the ki-scaled contribution and is clamped
    to the output range so it can never wind beyond what the actuator can do.
    State may be scalar or an array (one controller per CDU).
    """

    kp: float
    ki: float
    kd: float
    setpoint: float
    out_lo: float
    out_hi: float
    integral: float | np.ndarray = 0.0
    prev_error: float | np.ndarray = 0.0
    reverse_acting: bool = False

    def update(self, measurement, dt_s: float):
        error = measurement - self.setpoint
        if self.reverse_acting:
            error = -error
        self.integral = np.clip(self.integral + self.ki * error * dt_s,
                                self.out_lo, self.out_hi)
        deriv = self.kd * (error - self.prev_error) / dt_s if dt_s > 0 else 0.0
        self.prev_error = error
        return np.clip(self.kp * error + self.integral + deriv,
                       self.out_lo, self.out_hi)

    def copy(self) -> "PidController":
        return replace(
            self,
            integral=np.array(self.integral, copy=True) if np.ndim(self.integral) else self.integral,
            prev_error=np.array(self.prev_error, copy=True) if np.ndim(self.prev_error) else self.prev_error,
        )


@dataclass
class DeviceStager:
    """Discrete up/down staging with hysteresis hold times.

    A change requires the triggering condition to persist for hold_s and at
    least hold_s to have elapsed since the previous change of this device.
    """

    count: int
    lo: int
    hi: int
    above_s: float = 0.0
    below_s: float = 0.0
    last_change_s: float = -1e18

    def update(self, up_signal: bool, down_signal: bool, dt_s: float,
               hold_s: float, now_s: float) -> int:
        self.above_s = self.above_s + dt_s if up_signal else 0.0
        self.below_s = self.below_s + dt_s if down_signal else 0.0
        can_change = (now_s - self.last_change_s) >= hold_s
        if up_signal and self.above_s >= hold_s and can_change and self.count < self.hi:
            self.count += 1
            self.above_s = 0.0
            self.last_change_s = now_s
        elif down_signal and self.below_s >= hold_s and can_change and self.count > self.lo:
            self.count -= 1
            self.below_s = 0.0
            self.last_change_s = now_s
        return self.count

    def copy(self) -> "DeviceStager":
        return replace(self)


@dataclass
class StagingState:
    htwp: DeviceStager
    ctwp: DeviceStager
    ct: DeviceStager
    n_ehx: int = 1

    @property
    def n_htwp(self) -> int:
        return self.htwp.count

    @property
    def n_ctwp(self) -> int:
        return self.ctwp.count

    @property
    def n_ct(self) -> int:
        return self.ct.count

    def copy(self) -> "StagingState":
        return StagingState(self.htwp.copy(), self.ctwp.copy(), self.ct.copy(), self.n_ehx)


@dataclass
class CoolingInputs:
    """Heat into each CDU secondary loop plus outdoor conditions."""

    cdu_heat_w: np.ndarray
    wetbulb_c: float
    p_system_w: float | None = None

    def validate(self, n_cdus: int) -> None:
        heats = np.asarray(self.cdu_heat_w, dtype=float)
        if heats.shape != (n_cdus,):
            raise ValueError(f"cdu_heat_w must have shape ({n_cdus},), got {heats.shape}")
        if not np.all(np.isfinite(heats)) or np.any(heats < 0):
            raise ValueError("cdu_heat_w must be finite and >= 0")
        if not -30.0 <= self.wetbulb_c <= 45.0:
            raise ValueError(f"wetbulb_c {self.wetbulb_c} outside sanity band [-30, 45]")

    def to_record(self) -> dict[str, float]:
        rec = {f"rack_power_{i:02d}": float(v) for i, v in enumerate(self.cdu_heat_w)}
        rec["wetbulb_temperature"] = float(self.wetbulb_c)
        return rec


@dataclass
class CoolingState:
    """Full mutable state of the stepper between 15 s steps."""

    time_s: float
    # Per-CDU secondary loop temperatures
    t_sec_supply: np.ndarray
    t_sec_return: np.ndarray
    cdu_pump_speed: np.ndarray
    cdu_valve: np.ndarray
    # Facility loop temperatures
    t_htw_supply: float
    t_htw_return: float
    t_ctw_supply: float
    t_ctw_return: float
    t_ct_out_delayed: float
    # Actuators
    htwp_speed: float
    ctwp_speed: float
    fan_speed: float
    # Controllers and staging
    pid_cdu_pump: PidController
    pid_cdu_valve: PidController
    pid_htwp: PidController
    pid_ctwp: PidController
    pid_fan: PidController
    staging: StagingState
    htws_grad_c_per_min: float = 0.0

    def copy(self) -> "CoolingState":
        return CoolingState(
            time_s=self.time_s,
            t_sec_supply=self.t_sec_supply.copy(),
            t_sec_return=self.t_sec_return.copy(),
            cdu_pump_speed=self.cdu_pump_speed.copy(),
            cdu_valve=self.cdu_valve.copy(),
            t_htw_supply=self.t_htw_supply,
            t_htw_return=self.t_htw_return,
            t_ctw_supply=self.t_ctw_supply,
            t_ctw_return=self.t_ctw_return,
            t_ct_out_delayed=self.t_ct_out_delayed,
            htwp_speed=self.htwp_speed,
            ctwp_speed=self.ctwp_speed,
            fan_speed=self.fan_speed,
            pid_cdu_pump=self.pid_cdu_pump.copy(),
            pid_cdu_valve=self.pid_cdu_valve.copy(),
            pid_htwp=self.pid_htwp.copy(),
            pid_ctwp=self.pid_ctwp.copy(),
            pid_fan=self.pid_fan.copy(),
            staging=self.staging.copy(),
            htws_grad_c_per_min=self.htws_grad_c_per_min,
        )

    def finite(self) -> bool:
        arrays = [self.t_sec_supply, self.t_sec_return, self.cdu_pump_speed, self.cdu_valve]
        scalars = [self.t_htw_supply, self.t_htw_return, self.t_ctw_supply,
                   self.t_ctw_return, self.t_ct_out_delayed,
                   self.htwp_speed, self.ctwp_speed, self.fan_speed]
        return all(np.all(np.isfinite(a)) for a in arrays) and all(map(math.isfinite, scalars))


@dataclass
class CoolingOutputs:
    """One step's worth of model outputs plus conservation diagnostics."""

    time_s: float
    record: dict[str, float]
    pue: float
    total_aux_power_w: float
    heat_input_w: float
    heat_rejected_w: float

    def to_record(self) -> dict[str, float]:
        return self.record


def ct_header_pressure_kpa(flow_frac: float, n_ehx: int, cp: CoolingParams) -> float:
    """Quadratic flow-resistance law on the tower supply header; resistance
    rises when fewer intermediate heat exchangers are in the path."""
    resistance = (cp.ehx_count / max(n_ehx, 1)) ** 0.25
    return 50.0 + 300.0 * flow_frac ** 2 * resistance


def stage_pumps(staging: StagingState, cp: CoolingParams, dt_s: float, now_s: float,
                htwp_speed: float, ctwp_speed: float) -> StagingState:
    """Stage primary and tower pumps on sustained extreme speed commands."""
    staging = staging.copy()
    staging.htwp.update(htwp_speed > cp.stage_up_speed, htwp_speed < cp.stage_down_speed,
                        dt_s, cp.stage_hold_s, now_s)
    staging.ctwp.update(ctwp_speed > cp.stage_up_speed, ctwp_speed < cp.stage_down_speed,
                        dt_s, cp.stage_hold_s, now_s)
    staging.n_ehx = min(max(-(-staging.ct.count * cp.ehx_count // cp.ct_cells), 1),
                        cp.ehx_count)
    return staging


def stage_towers(staging: StagingState, cp: CoolingParams, dt_s: float, now_s: float,
                 header_pressure_kpa: float, htws_grad_c_per_min: float,
                 heat_input_w: float) -> StagingState:
    """Stage tower cells on header pressure excursions or a sustained trend
    in the primary supply temperature; at least one cell runs while any heat
    enters the plant."""
    staging = staging.copy()
    hi = cp.ct_header_pressure_setpoint_kpa + cp.ct_header_pressure_band_kpa
    lo = cp.ct_header_pressure_setpoint_kpa - cp.ct_header_pressure_band_kpa
    up = header_pressure_kpa > hi or htws_grad_c_per_min > cp.htws_gradient_threshold_c_per_min
    down_grad = -cp.ct_stage_down_factor * cp.htws_gradient_threshold_c_per_min
    down = header_pressure_kpa < lo or htws_grad_c_per_min < down_grad
    # A rising supply temperature wins a tie: more cells, never fewer.
    staging.ct.update(up, down and not up, dt_s, cp.stage_hold_s, now_s)
    if heat_input_w > 0 and staging.ct.count < 1:
        staging.ct.count = 1
    staging.n_ehx = min(max(-(-staging.ct.count * cp.ehx_count // cp.ct_cells), 1),
                        cp.ehx_count)
    return staging


class CoolingModel:
    """Stepper for one machine's cooling plant."""

    def __init__(self, config: SystemConfig):
        self.config = config
        self.cp = config.cooling
        self.n_cdus = config.topology.num_cdus
        self.cdu_pump_power_w = config.power.cdu_pump_w
        cp = self.cp
        self._kgps_per_gpm = GPM_TO_M3S * cp.density_kg_m3
        self.sec_rated_kgps = cp.cdu_secondary_rated_gpm * self._kgps_per_gpm
        self.prim_rated_kgps = cp.cdu_primary_rated_gpm * self._kgps_per_gpm
        self.htwp_rated_kgps = cp.htwp_rated_gpm * self._kgps_per_gpm
        self.ctwp_rated_kgps = cp.ctwp_rated_gpm * self._kgps_per_gpm
        self._ctw_nominal_kgps = cp.ctwp_count * self.ctwp_rated_kgps * 0.7

    # ------------------------------------------------------------------
    def initial_state(self, wetbulb_c: float = 15.0) -> CoolingState:
        cp = self.cp
        n = self.n_cdus
        t0 = max(wetbulb_c + 8.0, 25.0)
        mid = 0.5

        def pid(kp, ki, setpoint, lo, hi, init, reverse=False, vector=False):
            n_init = np.full(n, init) if vector else init
            return PidController(kp=kp, ki=ki, kd=0.0, setpoint=setpoint,
                                 out_lo=lo, out_hi=hi, integral=n_init,
                                 prev_error=np.zeros(n) if vector else 0.0,
                                 reverse_acting=reverse)

        staging = StagingState(
            htwp=DeviceStager(2, 1, cp.htwp_count),
            ctwp=DeviceStager(2, 1, cp.ctwp_count),
            ct=DeviceStager(4, 0, cp.ct_cells),
            n_ehx=1,
        )
        staging.n_ehx = min(max(-(-staging.ct.count * cp.ehx_count // cp.ct_cells), 1), cp.ehx_count)
        return CoolingState(
            time_s=0.0,
            t_sec_supply=np.full(n, t0),
            t_sec_return=np.full(n, t0),
            cdu_pump_speed=np.full(n, mid),
            cdu_valve=np.full(n, mid),
            t_htw_supply=t0,
            t_htw_return=t0,
            t_ctw_supply=t0,
            t_ctw_return=t0,
            t_ct_out_delayed=t0,
            htwp_speed=mid,
            ctwp_speed=mid,
            fan_speed=mid,
            pid_cdu_pump=pid(cp.cdu_pump_kp, cp.cdu_pump_ki,
                             cp.cdu_secondary_return_setpoint_c,
                             cp.cdu_pump_min_speed, 1.0, mid, vector=True),
            pid_cdu_valve=pid(cp.cdu_valve_kp, cp.cdu_valve_ki,
                              cp.cdu_secondary_supply_setpoint_c,
                              0.05, 1.0, mid, vector=True),
            pid_htwp=pid(cp.htwp_kp, cp.htwp_ki, 0.0, cp.htwp_min_speed, 1.0, mid,
                         reverse=True),
            pid_ctwp=pid(cp.ctwp_kp, cp.ctwp_ki, cp.ct_header_pressure_setpoint_kpa,
                         cp.ctwp_min_speed, 1.0, mid, reverse=True),
            pid_fan=pid(cp.fan_kp, cp.fan_ki, cp.ctw_supply_setpoint_c, 0.15, 1.0, mid),
            staging=staging,
        )

    def warmup(self, inputs: CoolingInputs, wetbulb_c: float | None = None,
               duration_s: float | None = None) -> CoolingState:
        """Settle the plant at a constant load before t=0 so reported series
        do not carry cold-start transients."""
        state = self.initial_state(wetbulb_c if wetbulb_c is not None else inputs.wetbulb_c)
        duration = duration_s if duration_s is not None else self.cp.warmup_s
        steps = max(1, int(duration // 15.0))
        state.time_s = -steps * 15.0
        for _ in range(steps):
            state, _ = self.step(state, inputs)
        return state

    # ------------------------------------------------------------------
    def step(self, state: CoolingState, inputs: CoolingInputs,
             dt_s: float = 15.0) -> tuple[CoolingState, CoolingOutputs]:
        """Advance the plant by one reporting stride.

        Returns the successor state and the flat output record; aborts with a
        diagnostic rather than propagate a non-finite or unstable state.
        """
        if dt_s <= 0:
            raise ValueError("dt_s must be positive")
        inputs.validate(self.n_cdus)
        if not state.finite():
            raise CoolingError(f"non-finite cooling state entering step at t={state.time_s}")

        cp = self.cp
        c = cp.specific_heat_j_kg_c
        s = state.copy()
        heats = np.asarray(inputs.cdu_heat_w, dtype=float)
        heat_total = float(heats.sum())

        # --- controls, once per stride ---------------------------------
        s.cdu_pump_speed = np.asarray(s.pid_cdu_pump.update(s.t_sec_return, dt_s))
        s.cdu_valve = np.asarray(s.pid_cdu_valve.update(s.t_sec_supply, dt_s))

        prim_demand = s.cdu_valve * self.prim_rated_kgps
        demand_total = float(prim_demand.sum())
        pump_capacity = s.staging.n_htwp * self.htwp_rated_kgps
        delivered = min(demand_total, pump_capacity * s.htwp_speed)
        # Track demand: reverse-acting PID drives (delivered - demand) to zero.
        flow_error = (delivered - demand_total) / max(pump_capacity, 1e-9)
        s.htwp_speed = float(s.pid_htwp.update(flow_error, dt_s))

        m_ctw = s.staging.n_ctwp * self.ctwp_rated_kgps * s.ctwp_speed
        p_header = ct_header_pressure_kpa(m_ctw / self._ctw_nominal_kgps,
                                          s.staging.n_ehx, cp)
        s.ctwp_speed = float(s.pid_ctwp.update(p_header, dt_s))
        s.fan_speed = float(s.pid_fan.update(s.t_ctw_supply, dt_s))

        # --- staging, after the controllers ----------------------------
        now = s.time_s
        s.staging = stage_pumps(s.staging, cp, dt_s, now, s.htwp_speed, s.ctwp_speed)
        s.staging = stage_towers(s.staging, cp, dt_s, now, p_header,
                                 s.htws_grad_c_per_min, heat_total)

        # --- resulting flows for this stride ----------------------------
        m_sec = s.cdu_pump_speed * self.sec_rated_kgps
        pump_capacity = s.staging.n_htwp * self.htwp_rated_kgps
        delivered = min(demand_total, pump_capacity * s.htwp_speed)
        m_prim = prim_demand * (delivered / demand_total if demand_total > 0 else 0.0)
        m_htw = float(m_prim.sum())
        m_ctw = s.staging.n_ctwp * self.ctwp_rated_kgps * s.ctwp_speed

        # --- explicit Euler sub-steps -----------------------------------
        n_sub = max(1, int(round(dt_s / cp.substep_s)))
        sub_dt = dt_s / n_sub
        t_hs_start = s.t_htw_supply
        rejected_j = 0.0
        eps_ehx = min(cp.ehx_effectiveness_base
                      + cp.ehx_effectiveness_per_unit * s.staging.n_ehx, 1.0)
        n_ct = max(s.staging.n_ct, 1)

        for _ in range(n_sub):
            # CDU heat exchangers: secondary return against primary supply.
            cmin_cdu = np.minimum(m_sec, m_prim) * c
            q_hex = cp.cdu_hex_effectiveness * cmin_cdu * (s.t_sec_return - s.t_htw_supply)

            t_sr_new = volume_temperature_step(
                s.t_sec_return, heats, m_sec, s.t_sec_supply,
                cp.cdu_thermal_capacity_j_c, sub_dt, c)
            t_ss_new = volume_temperature_step(
                s.t_sec_supply, -q_hex, m_sec, s.t_sec_return,
                cp.cdu_thermal_capacity_j_c, sub_dt, c)

            # Primary loop headers.
            q_hex_total = float(q_hex.sum())
            q_ehx = eps_ehx * min(m_htw, m_ctw) * c * (s.t_htw_return - s.t_ctw_supply)
            t_hr_new = volume_temperature_step(
                s.t_htw_return, q_hex_total, m_htw, s.t_htw_supply,
                cp.htw_thermal_capacity_j_c, sub_dt, c)
            t_hs_new = volume_temperature_step(
                s.t_htw_supply, -q_ehx, m_htw, s.t_htw_return,
                cp.htw_thermal_capacity_j_c, sub_dt, c)

            # Tower loop: outlet approaches wet-bulb, via a first-order lag.
            # The cells' thermal duty is what the intermediate exchangers are
            # actually moving into this loop.
            load_frac = max(q_ehx, 0.0) / (n_ct * cp.ct_cell_rated_w)
            approach = cp.ct_min_approach_c \
                + cp.ct_approach_gain_c * load_frac / max(s.fan_speed, 0.2)
            t_ct_out = min(s.t_ctw_return, inputs.wetbulb_c + approach)
            s.t_ct_out_delayed += (t_ct_out - s.t_ct_out_delayed) * sub_dt / cp.ct_delay_tau_s

            q_reject = m_ctw * c * (s.t_ctw_return - s.t_ct_out_delayed)
            rejected_j += q_reject * sub_dt
            t_cr_new = volume_temperature_step(
                s.t_ctw_return, q_ehx, m_ctw, s.t_ctw_supply,
                cp.ctw_thermal_capacity_j_c, sub_dt, c)
            t_cs_new = volume_temperature_step(
                s.t_ctw_supply, 0.0, m_ctw, s.t_ct_out_delayed,
                cp.ctw_thermal_capacity_j_c, sub_dt, c)

            deltas = [
                float(np.max(np.abs(t_sr_new - s.t_sec_return))),
                float(np.max(np.abs(t_ss_new - s.t_sec_supply))),
                abs(t_hr_new - s.t_htw_return), abs(t_hs_new - s.t_htw_supply),
                abs(t_cr_new - s.t_ctw_return), abs(t_cs_new - s.t_ctw_supply),
            ]
            if max(deltas) > 1.0:
                raise CoolingError(
                    f"integration unstable at t={s.time_s:.0f}s: "
                    f"{max(deltas):.2f} C in one {sub_dt:.1f}s sub-step"
                )
            s.t_sec_return, s.t_sec_supply = t_sr_new, t_ss_new
            s.t_htw_return, s.t_htw_supply = t_hr_new, t_hs_new
            s.t_ctw_return, s.t_ctw_supply = t_cr_new, t_cs_new

        s.time_s += dt_s
        grad = (s.t_htw_supply - t_hs_start) / dt_s * 60.0
        s.htws_grad_c_per_min = 0.85 * s.htws_grad_c_per_min + 0.15 * grad

        if not s.finite():
            raise CoolingError(f"non-finite cooling state after step at t={s.time_s}")

        outputs = self._assemble_outputs(s, inputs, m_sec, m_prim, m_htw, m_ctw,
                                         p_header, heat_total,
                                         rejected_j / dt_s)
        return s, outputs

    # ------------------------------------------------------------------
    def _assemble_outputs(self, s: CoolingState, inputs: CoolingInputs,
                          m_sec, m_prim, m_htw, m_ctw, p_header,
                          heat_total, heat_rejected_w) -> CoolingOutputs:
        cp = self.cp
        c = cp.specific_heat_j_kg_c
        rec: dict[str, float] = {}

        gpm = 1.0 / self._kgps_per_gpm
        q_hex = cp.cdu_hex_effectiveness * np.minimum(m_sec, m_prim) * c \
            * (s.t_sec_return - s.t_htw_supply)
        with np.errstate(divide="ignore", invalid="ignore"):
            prim_dT = np.where(m_prim > 0, q_hex / np.maximum(m_prim * c, 1e-9), 0.0)
        sec_f = s.cdu_pump_speed
        prim_f = m_prim / self.prim_rated_kgps
        htw_frac = m_htw / (cp.htwp_count * self.htwp_rated_kgps)
        p_htw_supply = 100.0 + 250.0 * htw_frac ** 2
        for i in range(self.n_cdus):
            p = f"cdu_{i:02d}_"
            rec[p + "pump_power_w"] = self.cdu_pump_power_w
            rec[p + "primary_flow_gpm"] = float(m_prim[i]) * gpm
            rec[p + "secondary_flow_gpm"] = float(m_sec[i]) * gpm
            rec[p + "primary_supply_temp_c"] = float(s.t_htw_supply)
            rec[p + "primary_return_temp_c"] = float(s.t_htw_supply + prim_dT[i])
            rec[p + "secondary_supply_temp_c"] = float(s.t_sec_supply[i])
            rec[p + "secondary_return_temp_c"] = float(s.t_sec_return[i])
            rec[p + "primary_supply_pressure_kpa"] = p_htw_supply - 30.0 * float(prim_f[i]) ** 2
            rec[p + "primary_return_pressure_kpa"] = p_htw_supply - 80.0 * float(prim_f[i]) ** 2
            rec[p + "secondary_supply_pressure_kpa"] = 250.0 + 180.0 * float(sec_f[i]) ** 2
            rec[p + "secondary_return_pressure_kpa"] = 250.0 + 40.0 * float(sec_f[i]) ** 2

        rec["htw_supply_temp_c"] = float(s.t_htw_supply)
        rec["htw_return_temp_c"] = float(s.t_htw_return)
        rec["ctw_supply_temp_c"] = float(s.t_ctw_supply)
        rec["ctw_return_temp_c"] = float(s.t_ctw_return)
        rec["htw_supply_pressure_kpa"] = p_htw_supply
        rec["htw_return_pressure_kpa"] = 100.0 + 70.0 * htw_frac ** 2
        rec["ctw_supply_pressure_kpa"] = float(p_header)
        rec["ctw_return_pressure_kpa"] = float(p_header) - 90.0 * (m_ctw / self._ctw_nominal_kgps) ** 2
        rec["htw_flow_gpm"] = m_htw * gpm
        rec["ctw_flow_gpm"] = m_ctw * gpm

        htwp_each = cp.htwp_rated_power_w * s.htwp_speed ** 3
        for j in range(4):
            rec[f"htwp_power_w_{j}"] = htwp_each if j < s.staging.n_htwp else 0.0
        rec["htwp_speed"] = s.htwp_speed
        ctwp_each = cp.ctwp_rated_power_w * s.ctwp_speed ** 3
        for j in range(4):
            rec[f"ctwp_power_w_{j}"] = ctwp_each if j < s.staging.n_ctwp else 0.0
        rec["ctwp_speed"] = s.ctwp_speed

        n_fans = int(round(cp.ct_fan_units * s.staging.n_ct / cp.ct_cells))
        fan_each = cp.ct_fan_rated_power_w * s.fan_speed ** 3
        for j in range(cp.ct_fan_units):
            rec[f"ct_fan_power_w_{j:02d}"] = fan_each if j < n_fans else 0.0

        rec["num_htwp_staged"] = float(s.staging.n_htwp)
        rec["num_ctwp_staged"] = float(s.staging.n_ctwp)
        rec["num_ehx_staged"] = float(s.staging.n_ehx)
        rec["num_ct_staged"] = float(s.staging.n_ct)

        aux = (self.n_cdus * self.cdu_pump_power_w
               + s.staging.n_htwp * htwp_each
               + s.staging.n_ctwp * ctwp_each
               + n_fans * fan_each)
        p_system = inputs.p_system_w if inputs.p_system_w is not None else heat_total
        pue = compute_pue(p_system, aux) if p_system > 0 else float("nan")
        rec["pue"] = pue
        rec["total_aux_power_w"] = aux

        return CoolingOutputs(
            time_s=s.time_s,
            record=rec,
            pue=pue,
            total_aux_power_w=aux,
            heat_input_w=heat_total,
            heat_rejected_w=heat_rejected_w,
        )
