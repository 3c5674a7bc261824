"""Declarative scenario configuration (TOML, ``schema = 1``).

A scenario file fixes the array, the region of interest, the optional
interference region, channel kind, power levels, phase sizes, scan grid, and
the beamformer/map-variant table.  Presets for the shipped experiment
scenarios live in ``steerlab/presets/``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path


if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .exceptions import ConfigError
from .geometry import ArrayGeometry, DirectionGrid, RectangleRegion, Region, SectorRegion
from .scene import RoomSpec

KIND_RF = "rf-freespace"
KIND_ACOUSTIC = "acoustic-image-method"
BEAMFORMERS = ("ds", "mvdr", "music")
MAP_VARIANTS = ("coral", "parallel-transport", "inverse-domain-coral")
PLACEMENTS = ("fixed", "per-trial")


@dataclass(frozen=True)
class ArraySpec:
    num_elements: int
    spacing_m: float
    origin_m: tuple = (0.0, 0.0, 0.0)
    wavelength_m: float | None = None  # acoustic configs derive it from the STFT bin


@dataclass(frozen=True)
class SignalSpec:
    snr_db: float | None = 20.0
    sir_db: float | None = None
    num_snapshots: int | None = None  # RF
    sample_rate_hz: float | None = None  # acoustic
    duration_s: float | None = None


@dataclass(frozen=True)
class StftSpec:
    window: int = 2048
    hop: int = 1024
    bin_index: int = 242


@dataclass(frozen=True)
class PhaseSpec:
    num_reference: int = 200
    num_adaptation: int = 100
    epsilon: float = 1e-7
    adaptation_desired_active: bool = True
    adaptation_interferers: int = 1
    operational_interferers: int = 1
    interferer_placement: str = "fixed"
    interferer_draws: int = 1
    operational_trials: int = 100
    seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    array: ArraySpec
    roi: Region
    signal: SignalSpec
    phases: PhaseSpec
    grid: DirectionGrid = field(default_factory=DirectionGrid)
    interference_region: Region | None = None
    room: RoomSpec | None = None
    stft: StftSpec | None = None
    beamformers: dict = field(default_factory=lambda: {"ds": "coral", "mvdr": "coral",
                                                       "music": "coral"})

    def __post_init__(self):
        if self.kind not in (KIND_RF, KIND_ACOUSTIC):
            raise ConfigError(f"kind must be {KIND_RF!r} or {KIND_ACOUSTIC!r}, got {self.kind!r}")
        if self.kind == KIND_ACOUSTIC:
            if self.room is None or self.stft is None:
                raise ConfigError("acoustic scenarios need [room] and [stft] sections")
            if self.signal.sample_rate_hz is None or self.signal.duration_s is None:
                raise ConfigError("acoustic scenarios need signal.sample_rate_hz and duration_s")
        else:
            if self.signal.num_snapshots is None:
                raise ConfigError("rf scenarios need signal.num_snapshots")
        for name, variant in self.beamformers.items():
            if name not in BEAMFORMERS:
                raise ConfigError(f"unknown beamformer {name!r}")
            if variant not in MAP_VARIANTS:
                raise ConfigError(f"unknown map variant {variant!r} for beamformer {name!r}")
            if variant == "inverse-domain-coral" and name != "mvdr":
                raise ConfigError("inverse-domain-coral is only defined for mvdr")
        if self.phases.interferer_placement not in PLACEMENTS:
            raise ConfigError(f"interferer_placement must be one of {PLACEMENTS}")
        if self.phases.num_reference < 1 or self.phases.num_adaptation < 1:
            raise ConfigError("phases.num_reference and num_adaptation must be >= 1")

    @property
    def wavelength(self) -> float:
        if self.array.wavelength_m is not None:
            return self.array.wavelength_m
        # acoustic: wavelength of the analysis bin
        freq = self.stft.bin_index * self.signal.sample_rate_hz / self.stft.window
        return self.room.speed_of_sound / freq

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.ula(self.array.num_elements, self.array.spacing_m,
                                 self.wavelength, origin=self.array.origin_m)

    @property
    def num_snapshots(self) -> int:
        """Snapshots per transmission (RF directly; acoustic via the STFT framing)."""
        if self.kind == KIND_RF:
            return self.signal.num_snapshots
        n = int(round(self.signal.sample_rate_hz * self.signal.duration_s))
        n_out = n + self.room.air_length - 1
        return (n_out - self.stft.window) // self.stft.hop + 1

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, phases=replace(self.phases, seed=seed))


def _section(data: dict, name: str, required: bool = True) -> dict | None:
    sec = data.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return None
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _get(sec: dict, name: str, field: str, default=None, required: bool = False):
    if field in sec:
        return sec[field]
    if required:
        raise ConfigError(f"missing {name}.{field}")
    return default


def _parse_region(sec: dict, name: str) -> Region:
    kind = _get(sec, name, "kind", required=True)
    if kind == "rectangle":
        corner_a = _get(sec, name, "corner_a", required=True)
        corner_b = _get(sec, name, "corner_b", required=True)
        try:
            return RectangleRegion.from_corners(corner_a, corner_b)
        except Exception as err:
            raise ConfigError(f"bad {name} rectangle: {err}") from err
    if kind == "sector":
        angles = _get(sec, name, "angles_deg", required=True)
        radius = _get(sec, name, "radius_m", required=True)
        center = tuple(_get(sec, name, "center_m", default=(0.0, 0.0, 0.0)))
        if not (isinstance(radius, (list, tuple)) and len(radius) == 2):
            raise ConfigError(f"{name}.radius_m must be [min, max]")
        if angles and not isinstance(angles[0], (list, tuple)):
            angles = [angles]
        try:
            return SectorRegion(tuple(tuple(iv) for iv in angles), float(radius[0]),
                                float(radius[1]), center)
        except Exception as err:
            raise ConfigError(f"bad {name} sector: {err}") from err
    raise ConfigError(f"{name}.kind must be 'rectangle' or 'sector', got {kind!r}")


def parse_config(data: dict) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a parsed TOML tree."""
    if data.get("schema") != 1:
        raise ConfigError("config must declare schema = 1")
    kind = data.get("kind")

    arr = _section(data, "array")
    array = ArraySpec(
        num_elements=int(_get(arr, "array", "num_elements", required=True)),
        spacing_m=float(_get(arr, "array", "spacing_m", required=True)),
        origin_m=tuple(_get(arr, "array", "origin_m", default=(0.0, 0.0, 0.0))),
        wavelength_m=_get(arr, "array", "wavelength_m"),
    )

    roi = _parse_region(_section(data, "roi"), "roi")
    interference = None
    if "interference" in data:
        interference = _parse_region(_section(data, "interference"), "interference")

    sig = _section(data, "signal")
    signal = SignalSpec(
        snr_db=_get(sig, "signal", "snr_db", default=20.0),
        sir_db=_get(sig, "signal", "sir_db"),
        num_snapshots=_get(sig, "signal", "num_snapshots"),
        sample_rate_hz=_get(sig, "signal", "sample_rate_hz"),
        duration_s=_get(sig, "signal", "duration_s"),
    )

    room = None
    if "room" in data:
        rsec = _section(data, "room")
        try:
            room = RoomSpec(
                dimensions=tuple(_get(rsec, "room", "dimensions_m", required=True)),
                rt60=float(_get(rsec, "room", "reverberation_s", required=True)),
                speed_of_sound=float(_get(rsec, "room", "speed_of_sound_mps", default=340.0)),
                air_length=int(_get(rsec, "room", "air_taps", default=2048)),
            )
        except ConfigError:
            raise
        except Exception as err:
            raise ConfigError(f"bad [room] section: {err}") from err

    stft = None
    if "stft" in data:
        ssec = _section(data, "stft")
        stft = StftSpec(
            window=int(_get(ssec, "stft", "window", default=2048)),
            hop=int(_get(ssec, "stft", "hop", default=1024)),
            bin_index=int(_get(ssec, "stft", "bin", default=242)),
        )

    gsec = data.get("grid", {})
    grid = DirectionGrid(
        start_deg=float(gsec.get("start_deg", 0.0)),
        end_deg=float(gsec.get("end_deg", 180.0)),
        step_deg=float(gsec.get("step_deg", 0.1)),
    )

    psec = data.get("phases", {})
    defaults = PhaseSpec()
    phases = PhaseSpec(
        num_reference=int(psec.get("num_reference", defaults.num_reference)),
        num_adaptation=int(psec.get("num_adaptation", defaults.num_adaptation)),
        epsilon=float(psec.get("epsilon", defaults.epsilon)),
        adaptation_desired_active=bool(psec.get("adaptation_desired_active", True)),
        adaptation_interferers=int(psec.get("adaptation_interferers", 1)),
        operational_interferers=int(psec.get("operational_interferers", 1)),
        interferer_placement=str(psec.get("interferer_placement", "fixed")),
        interferer_draws=int(psec.get("interferer_draws", 1)),
        operational_trials=int(psec.get("operational_trials", 100)),
        seed=int(psec.get("seed", 0)),
    )

    beamformers = dict(data.get("beamformers",
                                {"ds": "coral", "mvdr": "coral", "music": "coral"}))

    try:
        return ScenarioConfig(kind=kind, array=array, roi=roi, signal=signal, phases=phases,
                              grid=grid, interference_region=interference, room=room,
                              stft=stft, beamformers=beamformers)
    except ConfigError:
        raise
    except Exception as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except _toml.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err
    return parse_config(data)


def preset_path(name: str) -> Path:
    """Path of a shipped preset config (name without the .toml suffix)."""
    p = Path(__file__).parent / "presets" / f"{name}.toml"
    if not p.is_file():
        raise ConfigError(f"no preset named {name!r}")
    return p


def load_preset(name: str) -> ScenarioConfig:
    return load_config(preset_path(name))
