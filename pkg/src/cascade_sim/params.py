"""Physical and numerical parameters of the quantum-dot-cavity system.

Internal unit system: energies in ueV, times in ps, angular frequencies in
rad/ps.  Rates are carried as energies (ueV) and divided by hbar only at the
dynamics boundary.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict, replace
from enum import Enum
from typing import Optional

HBAR = 658.2119569  # ueV ps
KB = 86.17333262    # ueV / K


class VModeTreatment(str, Enum):
    EXPLICIT = "explicit"            # V cavity mode as a Fock factor
    EFFECTIVE = "effective"          # V mode folded into Lindblad decays
    ABSENT = "absent"                # no V mode at all


class InitialState(str, Enum):
    EXCITED_XX = "excited_xx"
    GROUND = "ground"


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = HBAR  # ueV ps
    kb: float = KB      # ueV / K

    def __post_init__(self):
        if self.hbar <= 0 or self.kb <= 0:
            raise ValueError("physical constants must be positive")


@dataclass(frozen=True)
class QDParams:
    """Four-level dot: ground, two fine-structure-split excitons, biexciton."""
    e_x: float = 1.3445e6          # exciton center energy (ueV)
    e_fss: float = 10.8            # fine structure splitting (ueV)
    e_bind: float = 2900.0         # biexciton binding energy (ueV, signed)
    gamma_rad_x: float = 1.5       # radiative X-G rate per transition (ueV)
    gamma_rad_xx: float = 1.38     # radiative XX-X rate per transition (ueV)
    gamma_deph_per_k: float = 1.0  # pure dephasing slope (ueV/K)

    def __post_init__(self):
        if self.e_x <= 0:
            raise ValueError("e_x must be positive")
        if self.gamma_rad_x < 0 or self.gamma_rad_xx < 0:
            raise ValueError("radiative rates must be non-negative")


@dataclass(frozen=True)
class CavityParams:
    g: float = 20.8                # QD-cavity coupling (ueV), equal for H and V
    kappa: float = 103.4           # cavity loss (ueV)
    mode_split: float = 206.8      # hbar*(omega_V - omega_H) (ueV)
    v_mode: VModeTreatment = VModeTreatment.EXPLICIT

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("g must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian drive pulse in the V polarization channel.

    ``area`` is the time integral of the bare Rabi frequency in units of pi.
    ``omega`` defaults to half the biexciton energy (two-photon resonance);
    ``t0`` defaults to 5 sigma so the pulse rises after t=0.
    """
    enabled: bool = False
    area: float = 5.2              # units of pi
    sigma: float = 5.0             # ps
    t0: Optional[float] = None     # ps; None -> 5*sigma
    omega: Optional[float] = None  # rad/ps; None -> E_XX / (2 hbar)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.t0 is not None and self.t0 < 5.0 * self.sigma:
            raise ValueError("t0 must be at least 5 sigma so the pulse rises after t=0")


@dataclass(frozen=True)
class PhononParams:
    alpha_p: float = 0.03          # deformation coupling factor (ps^2)
    hbar_omega_b: float = 1000.0   # cutoff energy (ueV)
    temperature: float = 4.2       # K
    include_phonons: bool = True   # polaron rescaling + phonon-mediated terms
    include_deph: bool = True      # phenomenological pure dephasing
    history_convolution: bool = False  # keep rho(t-tau) in the memory integral
    tau_mem: float = 10.0          # memory-kernel support (ps)
    kernel_dtau: float = 0.005     # kernel tabulation step (ps)

    def __post_init__(self):
        if self.alpha_p < 0:
            raise ValueError("alpha_p must be non-negative")
        if self.hbar_omega_b <= 0:
            raise ValueError("hbar_omega_b must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    @property
    def omega_b(self) -> float:
        """Cutoff angular frequency (rad/ps)."""
        return self.hbar_omega_b / HBAR


@dataclass(frozen=True)
class FilterSpec:
    """Lorentzian spectral filter realized as a weakly coupled sensor mode."""
    enabled: bool = False
    mu_s: float = 103.4            # filter linewidth (ueV)
    epsilon_s: Optional[float] = None  # sensor coupling (ueV); None -> kappa/100
    omega_s: Optional[float] = None    # filter center (rad/ps); None -> omega_H

    def __post_init__(self):
        if self.mu_s <= 0:
            raise ValueError("mu_s must be positive")


@dataclass(frozen=True)
class NumericsParams:
    """Step control and grid resolutions."""
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float = 0.01           # ps
    h_min: float = 1e-7            # ps
    h_max: float = 1.0             # ps
    ground_state_threshold: float = 1e-5
    dt_out: float = 0.5            # observable recording grid (ps)
    anchor_dt: float = 1.0         # two-time anchor spacing (ps)
    t_max: Optional[float] = None  # ps; None -> auto-detect decay
    t_max_cap: float = 50000.0     # hard stop for auto detection (ps)

    def __post_init__(self):
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dt_out <= 0 or self.anchor_dt <= 0:
            raise ValueError("grids must be positive")


@dataclass(frozen=True)
class SimConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    qd: QDParams = field(default_factory=QDParams)
    cavity: CavityParams = field(default_factory=CavityParams)
    pulse: PulseSpec = field(default_factory=PulseSpec)
    phonons: PhononParams = field(default_factory=PhononParams)
    filter: FilterSpec = field(default_factory=FilterSpec)
    initial_state: InitialState = InitialState.EXCITED_XX
    fock_cutoff: int = 2
    sensor_cutoff: int = 2
    compute_concurrence: bool = False
    numerics: NumericsParams = field(default_factory=NumericsParams)

    def __post_init__(self):
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be at least 2")
        if self.sensor_cutoff < 1:
            raise ValueError("sensor_cutoff must be at least 1")
        if self.filter.enabled and self.backaction_violated():
            import warnings
            warnings.warn(
                "sensor coupling risks back-action on the cavity: "
                "epsilon_s^2 >= 0.01 * mu_s * kappa", stacklevel=2)

    @property
    def epsilon_s(self) -> float:
        if self.filter.epsilon_s is not None:
            return self.filter.epsilon_s
        return self.cavity.kappa / 100.0

    def backaction_violated(self) -> bool:
        return self.epsilon_s ** 2 >= 0.01 * self.filter.mu_s * self.cavity.kappa


@dataclass(frozen=True)
class EnergyTable:
    """Level energies (ueV) and mode frequencies (rad/ps) derived from a config."""
    e_g: float
    e_xh: float
    e_xv: float
    e_xx: float
    omega_h: float
    omega_v: float
    omega_s: float
    delta_cav_xh_g: float  # hbar*(omega_H - omega_{XH->G}) = -(E_bind + E_fss) (ueV)

    @property
    def omega_cav_centr(self) -> float:
        return 0.5 * (self.omega_h + self.omega_v)

    def transition_energy(self, upper: str, lower: str) -> float:
        levels = {"g": self.e_g, "xh": self.e_xh, "xv": self.e_xv, "xx": self.e_xx}
        return levels[upper] - levels[lower]


def derive_energies(config: SimConfig) -> EnergyTable:
    """Level energies and cavity frequencies with the H mode pinned to XX-X_H.

    The ground state is the energy zero.  The H cavity mode tracks the
    XX-X_H transition; the V mode sits ``mode_split`` above it.  The X_H-G
    transition is then detuned from the H cavity by -(E_bind + E_fss).
    """
    qd = config.qd
    hbar = config.constants.hbar
    e_g = 0.0
    e_xh = qd.e_x + 0.5 * qd.e_fss
    e_xv = qd.e_x - 0.5 * qd.e_fss
    e_xx = 2.0 * qd.e_x - qd.e_bind
    omega_h = (e_xx - e_xh) / hbar
    omega_v = omega_h + config.cavity.mode_split / hbar
    omega_s = config.filter.omega_s if config.filter.omega_s is not None else omega_h
    delta = -(qd.e_bind + qd.e_fss)
    return EnergyTable(e_g=e_g, e_xh=e_xh, e_xv=e_xv, e_xx=e_xx,
                       omega_h=omega_h, omega_v=omega_v, omega_s=omega_s,
                       delta_cav_xh_g=delta)


@dataclass(frozen=True)
class RescaledCouplings:
    """Couplings after multiplication with the phonon displacement factor B."""
    b: float
    g: float                # B*g (ueV)
    omega0: float           # B*Omega_0 (pulse area, units of pi)
    gamma_rad_x: float      # B^2 * gamma_rad_x (ueV)
    gamma_rad_xx: float     # B^2 * gamma_rad_xx (ueV)


def polaron_rescale(config: SimConfig, b: float) -> RescaledCouplings:
    """Rescale QD-light couplings by the displacement factor B in (0, 1].

    Couplings scale linearly, radiative rates quadratically; the cavity loss
    and the pure dephasing rate are untouched.
    """
    if not (0.0 < b <= 1.0):
        raise ValueError(f"displacement factor must lie in (0, 1], got {b}")
    return RescaledCouplings(
        b=b,
        g=b * config.cavity.g,
        omega0=b * config.pulse.area,
        gamma_rad_x=b * b * config.qd.gamma_rad_x,
        gamma_rad_xx=b * b * config.qd.gamma_rad_xx,
    )


def gamma_deph(config: SimConfig) -> float:
    """Pure dephasing rate (ueV) at the configured temperature; zero when disabled."""
    if not config.phonons.include_deph:
        return 0.0
    return config.qd.gamma_deph_per_k * config.phonons.temperature


# --- config (de)serialization -------------------------------------------------

_SECTIONS = {
    "constants": PhysicalConstants,
    "qd": QDParams,
    "cavity": CavityParams,
    "pulse": PulseSpec,
    "phonons": PhononParams,
    "filter": FilterSpec,
    "numerics": NumericsParams,
}

_TOP_LEVEL = ("initial_state", "fock_cutoff", "sensor_cutoff", "compute_concurrence")


def config_to_dict(config: SimConfig) -> dict:
    d = asdict(config)
    d["initial_state"] = config.initial_state.value
    d["cavity"]["v_mode"] = config.cavity.v_mode.value
    return d


def config_from_dict(data: dict) -> SimConfig:
    """Build a SimConfig from nested dicts; unknown keys raise with their path."""
    kwargs = {}
    data = dict(data)
    for name, cls in _SECTIONS.items():
        section = data.pop(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"section '{name}' must be a table/object")
        section = dict(section)
        if name == "cavity" and "v_mode" in section:
            try:
                section["v_mode"] = VModeTreatment(section["v_mode"])
            except ValueError as exc:
                raise ConfigError(f"cavity.v_mode: {exc}") from None
        allowed = set(cls.__dataclass_fields__)
        unknown = set(section) - allowed
        if unknown:
            raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
        try:
            kwargs[name] = cls(**section)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"section '{name}': {exc}") from None
    for key in _TOP_LEVEL:
        if key in data:
            kwargs[key] = data.pop(key)
    if "initial_state" in kwargs:
        try:
            kwargs["initial_state"] = InitialState(kwargs["initial_state"])
        except ValueError as exc:
            raise ConfigError(f"initial_state: {exc}") from None
    if data:
        raise ConfigError(f"unknown top-level keys: {sorted(data)}")
    try:
        return SimConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> SimConfig:
    """Read a SimConfig from a TOML or JSON file."""
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        return config_from_dict(json.loads(text.decode("utf-8")))
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib
    return config_from_dict(tomllib.loads(text.decode("utf-8")))


def save_config(config: SimConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_hash(config: SimConfig) -> str:
    payload = json.dumps(config_to_dict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


class ConfigError(ValueError):
    """Raised when a config file fails validation; message carries the field path."""


def with_updates(config: SimConfig, **kwargs) -> SimConfig:
    """Functional update helper, e.g. with_updates(cfg, qd=replace(cfg.qd, e_bind=0))."""
    return replace(config, **kwargs)
