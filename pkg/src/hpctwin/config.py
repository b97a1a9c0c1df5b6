"""Machine description and simulation configuration.

Everything the simulator knows about a machine lives here, loaded from a
single JSON document so that a different system is a different data file,
not different code. Field names carry their units (_w, _s, _c, _gpm).
Defaults describe a 9472-node liquid-cooled system with 25 CDUs; any
subset of fields may be overridden, unknown fields are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, asdict, replace
from pathlib import Path
from typing import NamedTuple

AC_BASELINE = "AC_BASELINE"
SMART_STAGING = "SMART_STAGING"
DC_380V = "DC_380V"
LOSS_MODES = (AC_BASELINE, SMART_STAGING, DC_380V)

FCFS = "FCFS"
SJF = "SJF"
REPLAY = "REPLAY"
POLICIES = (FCFS, SJF, REPLAY)


class ConfigError(ValueError):
    """Raised when a config document fails to parse or validate."""


class NodeLocation(NamedTuple):
    cdu: int
    rack: int
    chassis: int
    blade: int


@dataclass(frozen=True)
class Topology:
    """Physical component counts and the node -> blade -> chassis -> rack -> CDU hierarchy."""

    num_cdus: int = 25
    racks_per_cdu: int = 3
    chassis_per_rack: int = 8
    rectifiers_per_rack: int = 32
    blades_per_rack: int = 64
    nodes_per_rack: int = 128
    sivocs_per_rack: int = 128
    switches_per_rack: int = 32
    nodes_total: int = 9472

    @property
    def nodes_per_chassis(self) -> int:
        return self.nodes_per_rack // self.chassis_per_rack

    @property
    def rectifiers_per_chassis(self) -> int:
        return self.rectifiers_per_rack // self.chassis_per_rack

    @property
    def num_racks(self) -> int:
        """Populated racks (the trailing rack group may be empty)."""
        return -(-self.nodes_total // self.nodes_per_rack)

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError(f"topology.{f.name} must be positive")
        capacity = self.num_cdus * self.racks_per_cdu * self.nodes_per_rack
        if self.nodes_total > capacity:
            raise ConfigError(
                f"topology.nodes_total={self.nodes_total} exceeds capacity "
                f"{capacity} (num_cdus x racks_per_cdu x nodes_per_rack)"
            )
        if self.nodes_per_rack != 2 * self.blades_per_rack:
            raise ConfigError("topology.nodes_per_rack must equal 2 x blades_per_rack")
        if self.rectifiers_per_rack != 4 * self.chassis_per_rack:
            raise ConfigError("topology.rectifiers_per_rack must equal 4 x chassis_per_rack")
        if self.nodes_per_rack % self.chassis_per_rack != 0:
            raise ConfigError("topology.nodes_per_rack must divide evenly into chassis_per_rack")


@dataclass(frozen=True)
class ComponentPowerTable:
    """Per-component wattages used to build node power from utilization."""

    cpu_idle_w: float = 90.0
    cpu_max_w: float = 280.0
    gpu_idle_w: float = 88.0
    gpu_max_w: float = 560.0
    ram_avg_w: float = 74.0
    nvme_unit_w: float = 15.0
    nic_unit_w: float = 20.0
    switch_avg_w: float = 250.0
    cdu_pump_w: float = 8700.0
    gpus_per_node: int = 4
    nics_per_node: int = 4
    nvme_per_node: int = 2

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError(f"power.{f.name} must be >= 0")
        if self.cpu_idle_w > self.cpu_max_w:
            raise ConfigError("power.cpu_idle_w must not exceed power.cpu_max_w")
        if self.gpu_idle_w > self.gpu_max_w:
            raise ConfigError("power.gpu_idle_w must not exceed power.gpu_max_w")


# Default load-dependent rectifier efficiency: (load per rectifier in W, efficiency).
# Anchors: idle-chassis operating point sits at 0.945, the sweet spot is 0.963 at
# 7.5 kW, and the curve settles to 0.960 toward rated load. The interior knot sets
# how slowly efficiency recovers from the idle droop; it was calibrated against the
# observed daily conversion-loss band and the measured gain of load-sharing staging.
DEFAULT_RECTIFIER_CURVE = (
    (2800.0, 0.945),
    (6000.0, 0.947),
    (7500.0, 0.963),
    (10000.0, 0.960),
)


@dataclass(frozen=True)
class LossModelParams:
    """Rectification and DC-DC conversion loss model.

    Modes: AC_BASELINE shares each chassis load across all four rectifiers;
    SMART_STAGING activates only as many rectifiers as maximize efficiency
    subject to capacity; DC_380V replaces the whole conversion chain with a
    flat-efficiency DC distribution.
    """

    rectifier_eff_nominal: float = 0.96
    sivoc_eff_nominal: float = 0.98
    rectifier_eff_curve: tuple[tuple[float, float], ...] = DEFAULT_RECTIFIER_CURVE
    rectifier_rated_w: float = 10000.0
    mode: str = AC_BASELINE
    dc_mode_efficiency: float = 0.973
    switches_on_dc_bus: bool = True

    def validate(self) -> None:
        for name in ("rectifier_eff_nominal", "sivoc_eff_nominal", "dc_mode_efficiency"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"loss_model.{name} must be in (0, 1], got {v}")
        if self.rectifier_rated_w <= 0:
            raise ConfigError("loss_model.rectifier_rated_w must be positive")
        if self.mode not in LOSS_MODES:
            raise ConfigError(f"loss_model.mode must be one of {LOSS_MODES}, got {self.mode!r}")
        curve = self.rectifier_eff_curve
        if len(curve) < 2:
            raise ConfigError("loss_model.rectifier_eff_curve needs at least two points")
        loads = [p[0] for p in curve]
        effs = [p[1] for p in curve]
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise ConfigError("loss_model.rectifier_eff_curve loads must be strictly increasing")
        if any(not 0.0 < e <= 1.0 for e in effs):
            raise ConfigError("loss_model.rectifier_eff_curve efficiencies must be in (0, 1]")
        peak = effs.index(max(effs))
        if any(effs[i + 1] < effs[i] for i in range(peak)):
            raise ConfigError("loss_model.rectifier_eff_curve must be nondecreasing up to its peak")


@dataclass(frozen=True)
class EconomicsParams:
    emission_intensity_lbs_per_mwh: float = 852.3
    lbs_per_metric_ton: float = 2204.6
    # Calibrated so ~1.14 MW of year-round loss costs roughly $900k.
    electricity_usd_per_kwh: float = 0.090

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError(f"economics.{f.name} must be positive")


@dataclass(frozen=True)
class SimulationParams:
    tick_s: float = 1.0
    trace_quanta_s: float = 15.0
    cooling_stride_ticks: int = 15
    policy: str = FCFS
    seed: int = 0
    cooling_efficiency: float = 0.945
    cooling_enabled: bool = True
    wetbulb_c: float = 15.0

    def validate(self) -> None:
        if self.tick_s <= 0:
            raise ConfigError("simulation.tick_s must be positive")
        if self.trace_quanta_s <= 0:
            raise ConfigError("simulation.trace_quanta_s must be positive")
        if self.cooling_stride_ticks < 1:
            raise ConfigError("simulation.cooling_stride_ticks must be >= 1")
        if self.policy not in POLICIES:
            raise ConfigError(f"simulation.policy must be one of {POLICIES}, got {self.policy!r}")
        if not 0.0 < self.cooling_efficiency <= 1.0:
            raise ConfigError("simulation.cooling_efficiency must be in (0, 1]")
        if not -30.0 <= self.wetbulb_c <= 45.0:
            raise ConfigError("simulation.wetbulb_c outside sanity band [-30, 45]")


@dataclass(frozen=True)
class CoolingParams:
    """Lumped-parameter constants for the three cooling loops.

    Thermal capacitances are order-of-magnitude engineering estimates; they set
    transient time constants, not steady-state balances, and are exposed here so
    calibration against real telemetry never requires a code change.
    """

    # Working fluid
    density_kg_m3: float = 1000.0
    specific_heat_j_kg_c: float = 4186.0

    # CDU-rack (secondary) loops, one per CDU
    cdu_secondary_rated_gpm: float = 450.0
    cdu_primary_rated_gpm: float = 300.0
    cdu_hex_effectiveness: float = 0.85
    cdu_thermal_capacity_j_c: float = 4.0e6
    cdu_secondary_supply_setpoint_c: float = 32.0
    cdu_secondary_return_setpoint_c: float = 44.0
    cdu_pump_min_speed: float = 0.25

    # Primary high-temperature-water loop
    htwp_count: int = 4
    htwp_rated_gpm: float = 1500.0
    htwp_rated_power_w: float = 75000.0
    htw_thermal_capacity_j_c: float = 6.0e7
    htwp_min_speed: float = 0.25

    # Cooling-tower loop
    ctwp_count: int = 4
    ctwp_rated_gpm: float = 2500.0
    ctwp_rated_power_w: float = 90000.0
    ctw_thermal_capacity_j_c: float = 6.0e7
    ctwp_min_speed: float = 0.25
    ct_cells: int = 20
    ct_fan_units: int = 16
    ct_cell_rated_w: float = 1.6e6
    ct_fan_rated_power_w: float = 30000.0
    ct_min_approach_c: float = 2.0
    ct_approach_gain_c: float = 4.0
    ct_delay_tau_s: float = 120.0
    ctw_supply_setpoint_c: float = 24.0
    ehx_count: int = 5
    ehx_effectiveness_base: float = 0.60
    ehx_effectiveness_per_unit: float = 0.03

    # PID gains per control loop (output units per measurement unit)
    cdu_pump_kp: float = 0.03
    cdu_pump_ki: float = 0.0005
    cdu_valve_kp: float = 0.05
    cdu_valve_ki: float = 0.0008
    htwp_kp: float = 0.25
    htwp_ki: float = 0.01
    ctwp_kp: float = 0.001
    ctwp_ki: float = 0.00005
    fan_kp: float = 0.02
    fan_ki: float = 0.0008

    # Staging rules
    stage_up_speed: float = 0.92
    stage_down_speed: float = 0.35
    stage_hold_s: float = 300.0
    ct_header_pressure_setpoint_kpa: float = 220.0
    ct_header_pressure_band_kpa: float = 40.0
    htws_gradient_threshold_c_per_min: float = 0.05
    # Down-staging needs a much stronger falling trend than up-staging needs a
    # rising one; a symmetric band limit-cycles around the one-cell capacity
    # quantum.
    ct_stage_down_factor: float = 6.0
    substep_s: float = 1.0
    warmup_s: float = 1800.0

    def validate(self) -> None:
        positive = (
            "density_kg_m3", "specific_heat_j_kg_c", "cdu_secondary_rated_gpm",
            "cdu_primary_rated_gpm", "cdu_thermal_capacity_j_c", "htwp_rated_gpm",
            "htwp_rated_power_w", "htw_thermal_capacity_j_c", "ctwp_rated_gpm",
            "ctwp_rated_power_w", "ctw_thermal_capacity_j_c", "ct_cell_rated_w",
            "ct_fan_rated_power_w", "ct_delay_tau_s", "substep_s", "stage_hold_s",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"cooling.{name} must be positive")
        for name in ("cdu_hex_effectiveness", "ehx_effectiveness_base"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigError(f"cooling.{name} must be in (0, 1]")
        if not 0.0 <= self.stage_down_speed < self.stage_up_speed <= 1.0:
            raise ConfigError("cooling.stage_down_speed must be below cooling.stage_up_speed in [0, 1]")
        for name in ("htwp_count", "ctwp_count", "ct_cells", "ehx_count", "ct_fan_units"):
            if getattr(self, name) < 1:
                raise ConfigError(f"cooling.{name} must be >= 1")


_SECTIONS = {
    "topology": Topology,
    "power": ComponentPowerTable,
    "loss_model": LossModelParams,
    "economics": EconomicsParams,
    "simulation": SimulationParams,
    "cooling": CoolingParams,
}


@dataclass(frozen=True)
class SystemConfig:
    """Immutable description of the machine; safe to share across concurrent runs."""

    topology: Topology = field(default_factory=Topology)
    power: ComponentPowerTable = field(default_factory=ComponentPowerTable)
    loss_model: LossModelParams = field(default_factory=LossModelParams)
    economics: EconomicsParams = field(default_factory=EconomicsParams)
    simulation: SimulationParams = field(default_factory=SimulationParams)
    cooling: CoolingParams = field(default_factory=CoolingParams)

    def validate(self) -> "SystemConfig":
        for section in _SECTIONS:
            getattr(self, section).validate()
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        # Tuples are not JSON-stable; normalize the efficiency curve to lists.
        d["loss_model"]["rectifier_eff_curve"] = [
            list(p) for p in self.loss_model.rectifier_eff_curve
        ]
        return d

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @staticmethod
    def from_dict(data: dict) -> "SystemConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be an object, got {type(data).__name__}")
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
        sections = {}
        for name, cls in _SECTIONS.items():
            payload = data.get(name, {})
            if not isinstance(payload, dict):
                raise ConfigError(f"config section {name!r} must be an object")
            known = {f.name: f for f in fields(cls)}
            bad = set(payload) - set(known)
            if bad:
                raise ConfigError(f"unknown field(s) in {name}: {sorted(bad)}")
            kwargs = dict(payload)
            if name == "loss_model" and "rectifier_eff_curve" in kwargs:
                try:
                    kwargs["rectifier_eff_curve"] = tuple(
                        (float(x), float(y)) for x, y in kwargs["rectifier_eff_curve"]
                    )
                except (TypeError, ValueError) as exc:
                    raise ConfigError(
                        "loss_model.rectifier_eff_curve must be a list of [load_w, efficiency] pairs"
                    ) from exc
            try:
                section = cls(**kwargs)
            except TypeError as exc:
                raise ConfigError(f"bad value in section {name!r}: {exc}") from exc
            sections[name] = section
        return SystemConfig(**sections).validate()

    def with_overrides(self, **section_updates) -> "SystemConfig":
        """Return a copy with dataclass-level replacements, e.g.
        ``cfg.with_overrides(loss_model=replace(cfg.loss_model, mode=DC_380V))``."""
        return replace(self, **section_updates).validate()


def load_config(path: str | Path) -> SystemConfig:
    """Load and validate a config file; omitted fields take machine defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return SystemConfig.from_dict(data)


def map_node(node_id: int, topology: Topology) -> NodeLocation:
    """Dense row-major placement of a node id in the cooling/power hierarchy.

    Node ids fill racks from 0 upward, so the final CDU group carries the
    remainder when the machine is not fully populated.
    """
    if not 0 <= node_id < topology.nodes_total:
        raise ValueError(
            f"node_id {node_id} out of range [0, {topology.nodes_total})"
        )
    rack = node_id // topology.nodes_per_rack
    cdu = rack // topology.racks_per_cdu
    local = node_id % topology.nodes_per_rack
    blade = local // 2
    blades_per_chassis = topology.blades_per_rack // topology.chassis_per_rack
    chassis = blade // blades_per_chassis
    return NodeLocation(cdu=cdu, rack=rack, chassis=chassis, blade=blade)


def nodes_in_cdu(topology: Topology, cdu: int) -> int:
    """Number of populated nodes cooled by one CDU group."""
    if not 0 <= cdu < topology.num_cdus:
        raise ValueError(f"cdu {cdu} out of range [0, {topology.num_cdus})")
    per_cdu = topology.racks_per_cdu * topology.nodes_per_rack
    start = cdu * per_cdu
    return max(0, min(topology.nodes_total - start, per_cdu))
