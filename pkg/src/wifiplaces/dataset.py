"""UJIIndoorLoc ingestion: typed records plus the registry of known networks.

The CSV layout is 520 WAP columns (RSSI in dBm, +100 meaning "not detected")
followed by LONGITUDE, LATITUDE, FLOOR, BUILDINGID, SPACEID, RELATIVEPOSITION,
USERID, PHONEID, TIMESTAMP. Absent readings are represented by omission inside
WifiScan, never by a sentinel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

N_WAP_COLUMNS = 520
TAIL_COLUMNS = (
    "LONGITUDE",
    "LATITUDE",
    "FLOOR",
    "BUILDINGID",
    "SPACEID",
    "RELATIVEPOSITION",
    "USERID",
    "PHONEID",
    "TIMESTAMP",
)
NOT_DETECTED = 100.0


class DatasetError(ValueError):
    """Malformed input file or record."""


@dataclass(frozen=True)
class WifiScan:
    """One measurement event: network index (into the registry) -> RSSI dBm."""

    readings: dict[int, float]


@dataclass(frozen=True)
class GroundTruth:
    longitude: float
    latitude: float
    floor: int
    building_id: int


@dataclass(frozen=True)
class Record:
    scan: WifiScan
    truth: GroundTruth
    user_id: int
    phone_id: int
    timestamp: int


class ApRegistry:
    """Ordered, immutable list of network identifiers.

    The order defines the feature-vector layout and is fixed at construction.
    """

    def __init__(self, names):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise DatasetError("duplicate network identifiers in registry")
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

    def __len__(self):
        return len(self._names)

    def __getitem__(self, i: int) -> str:
        return self._names[i]

    def __iter__(self):
        return iter(self._names)

    def __eq__(self, other):
        return isinstance(other, ApRegistry) and self._names == other._names

    def index_of(self, name: str) -> int | None:
        return self._index.get(name)

    @property
    def names(self) -> tuple[str, ...]:
        return self._names


@dataclass
class Dataset:
    records: list[Record]
    registry: ApRegistry
    # CSR view of all readings, built lazily for batch featurization.
    _csr: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __len__(self):
        return len(self.records)

    def truth_arrays(self):
        """(lon, lat, floor, building) as parallel numpy arrays."""
        n = len(self.records)
        lon = np.empty(n)
        lat = np.empty(n)
        floor = np.empty(n, dtype=np.int64)
        bld = np.empty(n, dtype=np.int64)
        for i, r in enumerate(self.records):
            t = r.truth
            lon[i], lat[i], floor[i], bld[i] = (
                t.longitude,
                t.latitude,
                t.floor,
                t.building_id,
            )
        return lon, lat, floor, bld

    def readings_csr(self):
        """Readings of all records as (indptr, ap_index, rssi) arrays."""
        if self._csr is None:
            indptr = np.zeros(len(self.records) + 1, dtype=np.int64)
            cols = []
            vals = []
            for i, r in enumerate(self.records):
                items = sorted(r.scan.readings.items())
                indptr[i + 1] = indptr[i] + len(items)
                cols.extend(k for k, _ in items)
                vals.extend(v for _, v in items)
            self._csr = (
                indptr,
                np.asarray(cols, dtype=np.int64),
                np.asarray(vals, dtype=np.float64),
            )
        return self._csr


def _parse_row(row, row_index, n_networks):
    if len(row) != n_networks + len(TAIL_COLUMNS):
        raise DatasetError(
            f"row {row_index}: expected {n_networks + len(TAIL_COLUMNS)} columns, "
            f"got {len(row)}"
        )
    readings = {}
    try:
        for j in range(n_networks):
            cell = row[j]
            if cell == "100":  # fast path for the dominant sentinel
                continue
            v = float(cell)
            if v == NOT_DETECTED:
                continue
            readings[j] = v
        tail = row[n_networks:]
        truth = GroundTruth(
            longitude=float(tail[0]),
            latitude=float(tail[1]),
            floor=int(float(tail[2])),
            building_id=int(float(tail[3])),
        )
        user_id = int(float(tail[6]))
        phone_id = int(float(tail[7]))
        timestamp = int(float(tail[8]))
    except ValueError as exc:
        raise DatasetError(f"row {row_index}: unparsable value ({exc})") from None
    if not 0 <= truth.floor <= 4:
        raise DatasetError(f"row {row_index}: floor {truth.floor} outside [0, 4]")
    if not 0 <= truth.building_id <= 2:
        raise DatasetError(
            f"row {row_index}: building {truth.building_id} outside [0, 2]"
        )
    return Record(WifiScan(readings), truth, user_id, phone_id, timestamp)


def load_ujiindoorloc(path) -> Dataset:
    """Load one UJIIndoorLoc CSV into a Dataset.

    WAP cells equal to +100 become omitted readings; every other value is
    kept verbatim as dBm. Malformed rows are rejected with their index
    (0-based over data rows).
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        wap_names = header[:N_WAP_COLUMNS]
        if len(header) != N_WAP_COLUMNS + len(TAIL_COLUMNS):
            raise DatasetError(
                f"{path}: expected {N_WAP_COLUMNS + len(TAIL_COLUMNS)} header "
                f"columns, got {len(header)}"
            )
        if not all(name.startswith("WAP") for name in wap_names):
            raise DatasetError(f"{path}: first {N_WAP_COLUMNS} columns must be WAP*")
        tail = tuple(h.strip().upper() for h in header[N_WAP_COLUMNS:])
        if tail != TAIL_COLUMNS:
            raise DatasetError(f"{path}: unexpected tail columns {tail}")
        registry = ApRegistry(wap_names)
        records = []
        for i, row in enumerate(reader):
            if not row:
                continue
            records.append(_parse_row(row, i, N_WAP_COLUMNS))
    return Dataset(records=records, registry=registry)


def registry_size(dataset: Dataset) -> int:
    return len(dataset.registry)


def export_records(dataset: Dataset, fh) -> None:
    """Debug dump: one `index,bssid=rssi;...,lon,lat,floor,building` line per record.

    RSSI values are written with repr so a reload compares bit-exact.
    """
    for i, r in enumerate(dataset.records):
        pairs = ";".join(
            f"{dataset.registry[j]}={float(v)!r}"
            for j, v in sorted(r.scan.readings.items())
        )
        t = r.truth
        fh.write(
            f"{i},{pairs},{t.longitude!r},{t.latitude!r},{t.floor},{t.building_id}\n"
        )


def parse_exported(fh, registry: ApRegistry):
    """Inverse of export_records, for round-trip checks. Yields (index, readings, truth)."""
    for line in fh:
        line = line.rstrip("\n")
        if not line:
            continue
        idx_s, pairs_s, lon_s, lat_s, floor_s, bld_s = line.split(",")
        readings = {}
        if pairs_s:
            for pair in pairs_s.split(";"):
                name, v = pair.split("=")
                j = registry.index_of(name)
                if j is None:
                    raise DatasetError(f"unknown network {name}")
                readings[j] = float(v)
        truth = GroundTruth(float(lon_s), float(lat_s), int(floor_s), int(bld_s))
        yield int(idx_s), readings, truth
