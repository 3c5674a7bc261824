"""Received-signal synthesis: sources, channels, mixing, and narrowband snapshots.

Two channel families are supported:

* ``narrowband-complex-gain`` (RF free space): per-element complex gain
  ``(1/r_m) exp(-2j pi r_m / lambda)``, snapshots drawn directly in the
  frequency domain.
* ``fir-time-domain`` (acoustic): image-method room impulse responses with
  Peterson fractional-delay interpolation; time-domain mixing followed by an
  STFT-bin extraction.

Power conventions: the desired source transmits at unit power; interferer
transmit power is ``10^(-SIR/10)`` per interferer; noise is spatially white
with per-element power set so that the element-averaged direct-path desired
power over noise power equals the configured SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.signal import fftconvolve

from .exceptions import ConfigError, InvalidInput
from .geometry import ArrayGeometry, simulated_steering_vector

# Peterson fractional-delay interpolator: odd tap count, low-pass cutoff
# relative to Nyquist.
FRACTIONAL_DELAY_TAPS = 81
FRACTIONAL_DELAY_CUTOFF = 0.9


@dataclass(frozen=True)
class RoomSpec:
    """Rectangular room for the image method."""

    dimensions: tuple  # (Lx, Ly, Lz) meters
    rt60: float  # reverberation time beta, seconds (0 = anechoic)
    speed_of_sound: float = 340.0
    air_length: int = 2048  # FIR taps per channel

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dimensions)
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise InvalidInput("room dimensions must be three positive extents")
        if self.rt60 < 0:
            raise InvalidInput("reverberation time must be >= 0")
        if self.speed_of_sound <= 0:
            raise InvalidInput("speed of sound must be positive")
        if self.air_length < 1:
            raise InvalidInput("air_length must be >= 1")
        object.__setattr__(self, "dimensions", dims)

    @property
    def volume(self) -> float:
        lx, ly, lz = self.dimensions
        return lx * ly * lz

    @property
    def surface(self) -> float:
        lx, ly, lz = self.dimensions
        return 2.0 * (lx * ly + lx * lz + ly * lz)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p > 0) and np.all(p < np.asarray(self.dimensions)))


@dataclass(frozen=True)
class Channel:
    """Propagation channel to all array elements: FIR taps or narrowband gains."""

    fir: np.ndarray | None = None  # (M, taps) real
    gain: np.ndarray | None = None  # (M,) complex

    def __post_init__(self):
        if (self.fir is None) == (self.gain is None):
            raise InvalidInput("channel needs exactly one of fir or gain")
        if self.fir is not None:
            fir = np.atleast_2d(np.asarray(self.fir, dtype=float))
            if fir.shape[1] < 1 or not np.isfinite(fir).all():
                raise InvalidInput("fir taps must be a nonempty finite array")
            object.__setattr__(self, "fir", fir)
        else:
            gain = np.asarray(self.gain, dtype=np.complex128).reshape(-1)
            if not np.all(np.isfinite(gain.view(float))):
                raise InvalidInput("gains must be finite")
            object.__setattr__(self, "gain", gain)

    @property
    def kind(self) -> str:
        return "fir-time-domain" if self.fir is not None else "narrowband-complex-gain"


@dataclass(frozen=True)
class SnapshotSet:
    """L narrowband snapshots (rows) at one frequency bin."""

    snapshots: np.ndarray  # (L, M) complex
    bin_frequency: float

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.snapshots, dtype=np.complex128))
        if z.shape[0] < 1:
            raise InvalidInput("need at least one snapshot")
        object.__setattr__(self, "snapshots", z)

    @property
    def num_snapshots(self) -> int:
        return self.snapshots.shape[0]

    @property
    def dim(self) -> int:
        return self.snapshots.shape[1]


@dataclass(frozen=True)
class Scene:
    """One transmission setup: geometry, source positions, channels, powers.

    ``room is None`` selects narrowband free-space channels (RF); otherwise
    channels are image-method FIRs and the output is time-domain.  Explicit
    ``desired_channels`` / ``interferer_channels`` (narrowband gains) override
    the free-space model when provided.
    """

    geometry: ArrayGeometry
    desired_positions: np.ndarray  # (k, 3)
    interferer_positions: np.ndarray  # (j, 3)
    snr_db: float | None = None
    sir_db: float | None = None
    room: RoomSpec | None = None
    num_snapshots: int | None = None  # RF
    sample_rate_hz: float | None = None  # acoustic
    duration_s: float | None = None
    desired_active: bool = True
    desired_channels: np.ndarray | None = None  # (k, M) complex, RF only
    interferer_channels: np.ndarray | None = None  # (j, M) complex, RF only

    def __post_init__(self):
        for name in ("desired_positions", "interferer_positions"):
            val = np.asarray(getattr(self, name), dtype=float).reshape(-1, 3)
            object.__setattr__(self, name, val)

    @property
    def num_active_sources(self) -> int:
        k = self.desired_positions.shape[0] if self.desired_active else 0
        return k + self.interferer_positions.shape[0]


def gen_gaussian_signal(length: int, rng: np.random.Generator, complex_valued: bool = False):
    """I.i.d. standard normal samples; circular complex with E|x|^2 = 1 if requested."""
    if length < 1:
        raise InvalidInput("signal length must be >= 1")
    if complex_valued:
        return (rng.standard_normal(length) + 1j * rng.standard_normal(length)) / math.sqrt(2.0)
    return rng.standard_normal(length)


def wall_reflection(room: RoomSpec) -> float:
    """Uniform wall reflection coefficient matching the room's reverberation time.

    Sabine: absorption ``alpha = 24 ln(10) V / (c S rt60)``, amplitude
    coefficient ``sqrt(1 - alpha)`` clipped to [0, 1).  rt60 = 0 is anechoic;
    rt60 short enough to push alpha past 1 also degenerates to the direct
    path only.
    """
    if room.rt60 <= 0.0:
        return 0.0
    alpha = 24.0 * math.log(10.0) * room.volume / (
        room.speed_of_sound * room.surface * room.rt60)
    if alpha >= 1.0:
        return 0.0
    return min(math.sqrt(1.0 - alpha), 1.0 - 1e-12)


@numba.njit(cache=True, fastmath=True)
def _image_fir_kernel(firs, src, mics, dims, refl, fs, c, n_taps, fc):  # pragma: no cover
    npts = firs.shape[1]
    n_mics = mics.shape[0]
    half = 0.5 * n_taps  # samples on each side of the arrival
    tw = n_taps / fs  # window duration, seconds
    d_max = c * (npts - 1 + half) / fs
    nx = int(math.ceil((d_max + dims[0]) / (2.0 * dims[0])))
    ny = int(math.ceil((d_max + dims[1]) / (2.0 * dims[1])))
    nz = int(math.ceil((d_max + dims[2]) / (2.0 * dims[2])))
    for rx in range(-nx, nx + 1):
        for ry in range(-ny, ny + 1):
            for rz in range(-nz, nz + 1):
                for px in range(2):
                    for py in range(2):
                        for pz in range(2):
                            nrefl = (abs(rx + px) + abs(rx) + abs(ry + py) + abs(ry)
                                     + abs(rz + pz) + abs(rz))
                            if nrefl == 0:
                                amp_refl = 1.0
                            else:
                                amp_refl = refl ** nrefl
                                if amp_refl == 0.0:
                                    continue
                            ix = (1.0 - 2.0 * px) * src[0] + 2.0 * rx * dims[0]
                            iy = (1.0 - 2.0 * py) * src[1] + 2.0 * ry * dims[1]
                            iz = (1.0 - 2.0 * pz) * src[2] + 2.0 * rz * dims[2]
                            for m in range(n_mics):
                                dx = ix - mics[m, 0]
                                dy = iy - mics[m, 1]
                                dz = iz - mics[m, 2]
                                d = math.sqrt(dx * dx + dy * dy + dz * dz)
                                if d > d_max or d <= 0.0:
                                    continue
                                tau = d / c
                                n0 = int(math.ceil(fs * tau - half))
                                n1 = int(math.floor(fs * tau + half))
                                if n0 < 0:
                                    n0 = 0
                                if n1 > npts - 1:
                                    n1 = npts - 1
                                if n1 < n0:
                                    continue
                                a = amp_refl / (4.0 * math.pi * d)
                                for n in range(n0, n1 + 1):
                                    t = n / fs - tau
                                    w = 0.5 * (1.0 + math.cos(2.0 * math.pi * t / tw))
                                    x = 2.0 * fc * t
                                    if x == 0.0:
                                        sinc = 1.0
                                    else:
                                        sinc = math.sin(math.pi * x) / (math.pi * x)
                                    firs[m, n] += a * w * sinc


def image_method_airs(room: RoomSpec, source, mics, fs: float,
                      reflection: float | None = None) -> np.ndarray:
    """Image-method impulse responses from ``source`` to each row of ``mics``.

    Returns an (M, room.air_length) array.  Both endpoints must lie strictly
    inside the room.  ``reflection`` overrides the Sabine-derived wall
    coefficient (0 forces the anechoic direct path only).
    """
    source = np.asarray(source, dtype=float).reshape(3)
    mics = np.atleast_2d(np.asarray(mics, dtype=float))
    if not room.contains(source):
        raise InvalidInput(f"source {source} is outside the room")
    for m in mics:
        if not room.contains(m):
            raise InvalidInput(f"microphone {m} is outside the room")
    refl = wall_reflection(room) if reflection is None else float(reflection)
    firs = np.zeros((mics.shape[0], room.air_length))
    _image_fir_kernel(firs, source, mics, np.asarray(room.dimensions), refl,
                      float(fs), room.speed_of_sound, FRACTIONAL_DELAY_TAPS,
                      FRACTIONAL_DELAY_CUTOFF * fs / 2.0)
    return firs


def image_method_air(room: RoomSpec, source, mic, fs: float) -> Channel:
    """Single source-microphone image-method channel."""
    return Channel(fir=image_method_airs(room, source, np.asarray(mic).reshape(1, 3), fs))


def _rf_channels(scene: Scene, positions: np.ndarray, override) -> np.ndarray:
    if override is not None:
        gains = np.atleast_2d(np.asarray(override, dtype=np.complex128))
        if gains.shape[1] != scene.geometry.num_elements:
            raise ConfigError("channel override width does not match the array")
        return gains
    return np.array([simulated_steering_vector(scene.geometry, p) for p in positions])


def _interferer_power(scene: Scene) -> float:
    return 1.0 if scene.sir_db is None else 10.0 ** (-scene.sir_db / 10.0)


def synthesize_received(scene: Scene, rng: np.random.Generator):
    """Mix desired sources, interferers, and noise for one transmission.

    RF scenes return a :class:`SnapshotSet`; acoustic scenes return the
    time-domain element signals as an (M, N) array (full convolution length).
    Desired, interferer, and noise draws come from independent child streams
    of ``rng`` so that component-wise synthesis is additive under a shared
    seed.
    """
    rng_desired, rng_interf, rng_noise = rng.spawn(3)
    if scene.room is None:
        return _synthesize_rf(scene, rng_desired, rng_interf, rng_noise)
    return _synthesize_acoustic(scene, rng_desired, rng_interf, rng_noise)


def _synthesize_rf(scene: Scene, rng_desired, rng_interf, rng_noise) -> SnapshotSet:
    if scene.num_snapshots is None or scene.num_snapshots < 1:
        raise ConfigError("RF scene needs num_snapshots >= 1")
    if scene.desired_positions.shape[0] == 0 and scene.desired_channels is None:
        raise ConfigError("scene needs a desired position (noise power reference)")
    m = scene.geometry.num_elements
    L = scene.num_snapshots
    h = _rf_channels(scene, scene.desired_positions, scene.desired_channels)
    g = _rf_channels(scene, scene.interferer_positions, scene.interferer_channels)
    z = np.zeros((L, m), dtype=np.complex128)
    for ch in h:
        s = gen_gaussian_signal(L, rng_desired, complex_valued=True)
        if scene.desired_active:
            z += np.outer(s, ch)
    amp_i = math.sqrt(_interferer_power(scene))
    for ch in g:
        q = amp_i * gen_gaussian_signal(L, rng_interf, complex_valued=True)
        z += np.outer(q, ch)
    if scene.snr_db is not None:
        direct_power = float(np.mean(np.abs(h[0]) ** 2))
        noise_power = direct_power / 10.0 ** (scene.snr_db / 10.0)
        z += math.sqrt(noise_power) * gen_gaussian_signal(L * m, rng_noise,
                                                          complex_valued=True).reshape(L, m)
    return SnapshotSet(snapshots=z, bin_frequency=299792458.0 / scene.geometry.wavelength)


def _synthesize_acoustic(scene: Scene, rng_desired, rng_interf, rng_noise) -> np.ndarray:
    if scene.sample_rate_hz is None or scene.duration_s is None:
        raise ConfigError("acoustic scene needs sample_rate_hz and duration_s")
    if scene.desired_positions.shape[0] == 0:
        raise ConfigError("scene needs a desired position (noise power reference)")
    fs = scene.sample_rate_hz
    n = int(round(fs * scene.duration_s))
    mics = scene.geometry.elements
    m = mics.shape[0]
    n_out = n + scene.room.air_length - 1
    z = np.zeros((m, n_out))
    direct_energy = None
    for pos in scene.desired_positions:
        firs = image_method_airs(scene.room, pos, mics, fs)
        s = gen_gaussian_signal(n, rng_desired)
        if scene.desired_active:
            z += fftconvolve(np.broadcast_to(s, (m, n)), firs, mode="full", axes=1)
        if direct_energy is None:
            direct = image_method_airs(scene.room, pos, mics, fs, reflection=0.0)
            direct_energy = float(np.mean((direct**2).sum(axis=1)))
    amp_i = math.sqrt(_interferer_power(scene))
    for pos in scene.interferer_positions:
        firs = image_method_airs(scene.room, pos, mics, fs)
        q = amp_i * gen_gaussian_signal(n, rng_interf)
        z += fftconvolve(np.broadcast_to(q, (m, n)), firs, mode="full", axes=1)
    if scene.snr_db is not None:
        noise_power = direct_energy / 10.0 ** (scene.snr_db / 10.0)
        z += math.sqrt(noise_power) * rng_noise.standard_normal((m, n_out))
    return z


def stft_bin(signals, fs: float, window_len: int, hop: int, bin_index: int) -> SnapshotSet:
    """Extract one DFT bin of a rectangular-window STFT as a snapshot set.

    ``signals`` is (M, N) or (N,); frames start every ``hop`` samples and the
    number of snapshots is ``floor((N - window_len)/hop) + 1``.
    """
    z = np.atleast_2d(np.asarray(signals, dtype=float))
    n = z.shape[1]
    if window_len > n:
        raise InvalidInput("window longer than the signal")
    if hop < 1:
        raise InvalidInput("hop must be >= 1")
    if not (0 <= bin_index < window_len):
        raise InvalidInput(f"bin index {bin_index} out of range for window {window_len}")
    num_frames = (n - window_len) // hop + 1
    basis = np.exp(-2j * np.pi * bin_index * np.arange(window_len) / window_len)
    frames = np.lib.stride_tricks.sliding_window_view(z, window_len, axis=1)[:, ::hop, :]
    snaps = frames[:, :num_frames, :] @ basis  # (M, L)
    return SnapshotSet(snapshots=snaps.T.copy(), bin_frequency=bin_index * fs / window_len)


def snapshots_to_csv(snapshots: SnapshotSet, path) -> None:
    """Write snapshots as CSV: one row per snapshot, re/im pairs per element."""
    z = snapshots.snapshots
    cols = []
    for j in range(z.shape[1]):
        cols.append(z[:, j].real)
        cols.append(z[:, j].imag)
    header = ",".join(f"re_{j},im_{j}" for j in range(z.shape[1]))
    np.savetxt(path, np.column_stack(cols), delimiter=",",
               header=f"bin_frequency={snapshots.bin_frequency!r}\n" + header)


def snapshots_from_csv(path) -> SnapshotSet:
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("# bin_frequency="):
        raise InvalidInput("snapshot CSV is missing its bin_frequency header")
    freq = float(first.split("=", 1)[1])
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    z = data[:, 0::2] + 1j * data[:, 1::2]
    return SnapshotSet(snapshots=z, bin_frequency=freq)
