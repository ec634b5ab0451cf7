"""Binary feature vectors from WiFi scans.

Each network owns a sub-vector with one bit per threshold; bit j is set when
the reading strictly exceeds threshold j. Thresholds are uniform over
[range_low, range_high] inclusive, so a 10 dBm width gives 11 of them. The
full vector is the network-major concatenation of all sub-vectors; a network
absent from the scan contributes all zeros. Readings above range_high
saturate to all ones, readings at or below range_low to all zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ApRegistry, Dataset, WifiScan


@dataclass(frozen=True)
class BinningConfig:
    range_low: float = -110.0
    range_high: float = -10.0
    bin_width: float = 10.0

    def __post_init__(self):
        if not self.range_low < self.range_high:
            raise ValueError("range_low must be below range_high")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        span = self.range_high - self.range_low
        steps = span / self.bin_width
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(
                f"bin_width {self.bin_width} does not divide range {span}"
            )

    @property
    def bins_per_network(self) -> int:
        return int(round((self.range_high - self.range_low) / self.bin_width)) + 1


def make_thresholds(config: BinningConfig) -> np.ndarray:
    """Ordered thresholds t_j = range_low + j*bin_width, endpoints included."""
    k = config.bins_per_network
    return config.range_low + config.bin_width * np.arange(k, dtype=np.float64)


def binarize_reading(rssi: float, config: BinningConfig) -> np.ndarray:
    """Sub-vector for one detected reading: bit j = 1 iff rssi > t_j."""
    return (rssi > make_thresholds(config)).astype(np.uint8)


def feature_length(registry: ApRegistry, config: BinningConfig) -> int:
    return len(registry) * config.bins_per_network


def featurize_scan(
    scan: WifiScan, registry: ApRegistry, config: BinningConfig
) -> np.ndarray:
    """Full network-major bit vector for one scan (dtype uint8)."""
    k = config.bins_per_network
    bits = np.zeros(len(registry) * k, dtype=np.uint8)
    if not scan.readings:
        return bits
    thresholds = make_thresholds(config)
    for j, rssi in scan.readings.items():
        if not 0 <= j < len(registry):
            raise IndexError(f"network index {j} outside registry of {len(registry)}")
        bits[j * k : (j + 1) * k] = rssi > thresholds
    return bits


def featurize_records(
    dataset: Dataset, indices, config: BinningConfig
) -> np.ndarray:
    """Feature matrix (len(indices) x feature_length) for the given records.

    Vectorized over all readings at once; equivalent to stacking
    featurize_scan per record.
    """
    indices = np.asarray(indices, dtype=np.int64)
    k = config.bins_per_network
    d = feature_length(dataset.registry, config)
    out = np.zeros((len(indices), d), dtype=np.uint8)
    if len(indices) == 0:
        return out
    indptr, cols, vals = dataset.readings_csr()
    thresholds = make_thresholds(config)
    for row, rec_idx in enumerate(indices):
        lo, hi = indptr[rec_idx], indptr[rec_idx + 1]
        if lo == hi:
            continue
        sub = vals[lo:hi, None] > thresholds[None, :]  # (n_readings, k)
        flat = (cols[lo:hi, None] * k + np.arange(k)[None, :]).ravel()
        out[row, flat] = sub.ravel()
    return out


def bits_to_string(bits: np.ndarray) -> str:
    """Debug serialization: '0'/'1' characters, network-major."""
    return "".join("1" if b else "0" for b in bits)


def string_to_bits(s: str) -> np.ndarray:
    if set(s) - {"0", "1"}:
        raise ValueError("bit string may contain only '0' and '1'")
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")
