"""Network geometry, free-space channel gains, and random instance generation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_S = 2.998e8

# Users drawn closer than this to any BS are re-drawn: the free-space model is
# far-field only and would produce gains > 1 near the antenna.
MIN_USER_BS_DISTANCE_M = 1.0


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power level in dBm to watts."""
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0) * 1e-3


def watts_to_dbm(p_w: float) -> float:
    """Convert a power level in watts to dBm."""
    return 10.0 * np.log10(np.asarray(p_w, dtype=float) * 1e3)


def noise_power(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power (W) over a bandwidth, from a PSD in dBm/Hz."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return dbm_to_watts(psd_dbm_hz + 10.0 * np.log10(bandwidth_hz))


def free_space_gain(distance_m, carrier_hz):
    """Free-space amplitude gain wavelength/(4*pi*d); its square enters the SINR.

    Accepts scalars or arrays. Raises for non-positive distances (co-located
    antennas are out of the model's validity range).
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("free-space gain requires distance > 0")
    wavelength = SPEED_OF_LIGHT_M_S / carrier_hz
    return wavelength / (4.0 * np.pi * d)


@dataclass(frozen=True)
class SystemParams:
    """Scalar system-level parameters shared by all instances."""

    bandwidth_hz: float = 1e6
    carrier_hz: float = 1.8e9
    noise_psd_dbm_hz: float = -174.0
    max_power_dbm: float = 23.0
    area_side_m: float = 2500.0

    def __post_init__(self):
        if self.bandwidth_hz <= 0 or self.carrier_hz <= 0 or self.area_side_m <= 0:
            raise ValueError("bandwidth, carrier and area side must be positive")
        if self.noise_w <= 0:
            raise ValueError("derived noise power must be positive")

    @property
    def noise_w(self) -> float:
        return float(noise_power(self.noise_psd_dbm_hz, self.bandwidth_hz))

    @property
    def max_power_w(self) -> float:
        return float(dbm_to_watts(self.max_power_dbm))


@dataclass(frozen=True)
class NetworkInstance:
    """One realization of the network: positions, channel gains, budgets.

    gain2[u, b] holds the squared channel magnitude from user u to BS b,
    linear scale. Immutable after construction; safe to share across workers.
    """

    bs_positions: np.ndarray      # (B, 2) meters
    user_positions: np.ndarray    # (U, 2) meters
    max_power_w: np.ndarray       # (U,) watts
    gain2: np.ndarray             # (U, B) linear
    noise_w: np.ndarray           # (B,) watts
    bandwidth_hz: float

    @property
    def n_bs(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]

    def user_bs_distances(self) -> np.ndarray:
        """Euclidean distance matrix, shape (U, B)."""
        diff = self.user_positions[:, None, :] - self.bs_positions[None, :, :]
        return np.linalg.norm(diff, axis=2)


def generate_network(params: SystemParams, n_bs: int, n_users: int, seed: int) -> NetworkInstance:
    """Draw a random instance: positions i.i.d. uniform on the square.

    Users landing within MIN_USER_BS_DISTANCE_M of any BS are re-drawn.
    Deterministic for a fixed seed.
    """
    if n_bs < 1 or n_users < 1:
        raise ValueError("need at least one BS and one user")
    rng = np.random.default_rng(seed)
    side = params.area_side_m
    bs_pos = rng.uniform(0.0, side, size=(n_bs, 2))
    user_pos = rng.uniform(0.0, side, size=(n_users, 2))
    for _ in range(1000):
        d = np.linalg.norm(user_pos[:, None, :] - bs_pos[None, :, :], axis=2)
        bad = d.min(axis=1) < MIN_USER_BS_DISTANCE_M
        if not bad.any():
            break
        user_pos[bad] = rng.uniform(0.0, side, size=(int(bad.sum()), 2))
    else:
        raise RuntimeError("could not place users away from BSs")

    gain2 = free_space_gain(d, params.carrier_hz) ** 2
    instance = NetworkInstance(
        bs_positions=bs_pos,
        user_positions=user_pos,
        max_power_w=np.full(n_users, params.max_power_w),
        gain2=gain2,
        noise_w=np.full(n_bs, params.noise_w),
        bandwidth_hz=params.bandwidth_hz,
    )
    validate_instance(instance, params)
    return instance


def validate_instance(instance: NetworkInstance, params: SystemParams | None = None):
    """Check the structural invariants of an instance; raises ValueError."""
    g2 = instance.gain2
    if g2.shape != (instance.n_users, instance.n_bs):
        raise ValueError("gain2 shape does not match positions")
    if not np.all(np.isfinite(g2)) or np.any(g2 <= 0.0):
        raise ValueError("gain2 entries must be positive and finite")
    if np.any(instance.max_power_w <= 0.0):
        raise ValueError("per-user power caps must be positive")
    if np.any(instance.noise_w <= 0.0):
        raise ValueError("noise powers must be positive")
    if params is not None:
        side = params.area_side_m
        for pos in (instance.bs_positions, instance.user_positions):
            if np.any(pos < 0.0) or np.any(pos > side):
                raise ValueError("positions must lie inside the deployment square")
