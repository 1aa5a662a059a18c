"""Radio and energy bookkeeping: unit conversions, path loss, harvested energy, SNR.

Durations are in symbols. ``SystemParams`` stores values in the units they are
usually quoted in (dBm, dB) and exposes linear/watt properties.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Callable, Optional

import numpy as np

from .errors import InvalidDuration, InvalidGeometry, InvalidParams


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def db_to_linear(db):
    return _out(10.0 ** (np.asarray(db, dtype=float) / 10.0))


def linear_to_db(x):
    return _out(10.0 * np.log10(np.asarray(x, dtype=float)))


def dbm_to_watt(dbm):
    return _out(1e-3 * db_to_linear(dbm))


def watt_to_dbm(w):
    return _out(linear_to_db(w) + 30.0)


@dataclass(frozen=True)
class SystemParams:
    """Radio, energy and quality-of-service constants of one cluster.

    Defaults are the evaluation setup: 2.4 GHz carrier, 10 MHz bandwidth,
    30 dBm server power, EH efficiency 0.5, -104 dB residual loop
    interference, -174 dBm noise, path-loss exponent 2.7 and 128-bit packets.
    ``eps_max`` and ``gamma_th`` are not fixed by the setup; 0.1 and 1.0 are
    our defaults.

    ``noise_mode='total'`` takes ``sigma2_dbm`` as the total noise power;
    ``'per_hz'`` takes it as a density and integrates over ``bandwidth``.
    """

    p_c_dbm: float = 30.0
    mu: float = 0.5
    h_i_db: float = -104.0
    sigma2_dbm: float = -174.0
    eta: float = 2.7
    bandwidth: float = 10e6
    carrier_freq: float = 2.4e9
    d_bits: int = 128
    eps_max: float = 0.1
    gamma_th: float = 1.0
    noise_mode: str = "total"

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise InvalidParams(f"mu must be in (0, 1], got {self.mu}")
        if not 0.0 < self.eps_max <= 0.5:
            raise InvalidParams(f"eps_max must be in (0, 0.5], got {self.eps_max}")
        if not self.gamma_th >= 1.0:
            raise InvalidParams(f"gamma_th must be >= 1, got {self.gamma_th}")
        if not self.eta > 0:
            raise InvalidParams(f"eta must be > 0, got {self.eta}")
        if not self.bandwidth > 0:
            raise InvalidParams(f"bandwidth must be > 0, got {self.bandwidth}")
        if int(self.d_bits) != self.d_bits or self.d_bits < 1:
            raise InvalidParams(f"d_bits must be a positive integer, got {self.d_bits}")
        if self.noise_mode not in ("total", "per_hz"):
            raise InvalidParams(f"noise_mode must be 'total' or 'per_hz', got {self.noise_mode!r}")
        for name in ("p_c_dbm", "h_i_db", "sigma2_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite")

    @property
    def p_c(self) -> float:
        """Server transmit power in watts."""
        return dbm_to_watt(self.p_c_dbm)

    @property
    def h_i(self) -> float:
        """Residual loop-interference power gain (linear)."""
        return db_to_linear(self.h_i_db)

    @property
    def sigma2(self) -> float:
        """Noise power in watts."""
        n = dbm_to_watt(self.sigma2_dbm)
        return n * self.bandwidth if self.noise_mode == "per_hz" else n

    @property
    def symbol_time(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def interference_plus_noise(self) -> float:
        return self.h_i * self.p_c + self.sigma2

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class Device:
    """Per-device channel state.

    ``z`` is the time-wrapped channel gain, so that the SNR of an update is
    ``z * m_c / m_r``. Devices built with :meth:`from_gain` carry no geometry.
    """

    id: int
    z: float
    distance: Optional[float] = None
    fading: Optional[float] = None

    def __post_init__(self):
        if not (self.z > 0 and math.isfinite(self.z)):
            raise InvalidParams(f"channel gain z must be finite and > 0, got {self.z}")

    @classmethod
    def from_gain(cls, z: float, id: int = 0) -> "Device":
        return cls(id=id, z=float(z))


def channel_gain(distance, fading, eta):
    """Large- plus small-scale power gain fading**2 * distance**-eta."""
    return fading * fading * distance ** (-eta)


def time_wrapped_gain(params: SystemParams, distance: float, fading: float = 1.0) -> float:
    return params.mu * params.p_c * channel_gain(distance, fading, params.eta) / params.interference_plus_noise


def make_device(params: SystemParams, distance: float, fading: float = 1.0, id: int = 0) -> Device:
    if not distance > 0:
        raise InvalidGeometry(f"distance must be > 0, got {distance}")
    if not fading > 0:
        raise InvalidGeometry(f"fading amplitude must be > 0, got {fading}")
    z = time_wrapped_gain(params, distance, fading)
    dev = Device(id=id, z=z, distance=float(distance), fading=float(fading))
    if not math.isclose(dev.z, time_wrapped_gain(params, dev.distance, dev.fading), rel_tol=1e-12):
        raise InvalidParams("time-wrapped gain inconsistent with geometry")
    return dev


def make_devices(params: SystemParams, distances, fading=None) -> list[Device]:
    distances = list(distances)
    if fading is None:
        fading = [1.0] * len(distances)
    return [make_device(params, d, f, id=i) for i, (d, f) in enumerate(zip(distances, fading))]


def rayleigh_fading(rng: np.random.Generator, n: int) -> np.ndarray:
    """Rayleigh amplitudes with unit mean-square power."""
    return np.sqrt(rng.exponential(1.0, size=n))


def snr(device: Device, m_c, m_r):
    """Linear SNR of an update after charging for ``m_c`` and sending over ``m_r`` symbols."""
    if np.any(np.asarray(m_r) <= 0):
        raise InvalidDuration("update duration m_r must be > 0")
    if np.any(np.asarray(m_c) < 0):
        raise InvalidDuration("charge duration m_c must be >= 0")
    return device.z * m_c / m_r


EnergyModel = Callable[[float, float, float], float]


def linear_energy(received_power: float, duration: float, mu: float) -> float:
    """Linear harvester: a fixed fraction ``mu`` of the incident energy."""
    return mu * received_power * duration


def harvested_energy(device: Device, m_c, params: SystemParams, model: EnergyModel = linear_energy):
    """Energy in joules harvested over ``m_c`` symbols.

    ``model(received_power_w, duration_s, mu)`` is the harvester curve; only
    the linear one ships with the package.
    """
    if np.any(np.asarray(m_c) < 0):
        raise InvalidDuration("charge duration m_c must be >= 0")
    if device.distance is None:
        raise InvalidGeometry("device has no geometry; build it with make_device")
    z_hat = channel_gain(device.distance, device.fading, params.eta)
    return model(z_hat * params.p_c, m_c * params.symbol_time, params.mu)
