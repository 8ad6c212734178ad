"""Descriptor datasets: loading, validation, synthesis, serialization.

A dataset is an N x M matrix of precomputed numeric descriptors plus a
measured property vector; it defines the regression problem the GA
optimizes over. Datasets are immutable after construction and safe to
share read-only across concurrent runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass

import numpy as np


class DatasetError(ValueError):
    """Base class for dataset construction and parsing failures."""


class MissingColumn(DatasetError):
    pass


class NonFiniteValue(DatasetError):
    """A cell failed to parse as a finite number.

    ``row`` is the 0-based data-row index (header excluded); ``col`` is the
    0-based descriptor index, or the number of descriptors when the property
    column is at fault.
    """

    def __init__(self, row: int, col: int, message: str | None = None):
        self.row = row
        self.col = col
        super().__init__(message or f"non-finite value at row {row}, descriptor {col}")


class DuplicateDescriptorName(DatasetError):
    pass


class ConstantProperty(DatasetError):
    pass


class InvalidShape(DatasetError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Immutable descriptor matrix with its measured property vector.

    Invariants enforced at construction: at least two uniquely-named
    descriptors, every value finite, property variance nonzero. The
    regression-size constraint N >= k+2 is checked where k is known
    (at fit time).
    """

    compound_ids: tuple[str, ...]
    descriptor_names: tuple[str, ...]
    descriptors: np.ndarray
    property_values: np.ndarray

    def __post_init__(self):
        descriptors = np.asarray(self.descriptors, dtype=float)
        prop = np.asarray(self.property_values, dtype=float)
        object.__setattr__(self, "descriptors", descriptors)
        object.__setattr__(self, "property_values", prop)
        if descriptors.ndim != 2:
            raise InvalidShape("descriptors must be a 2-D matrix")
        n, m = descriptors.shape
        if m < 2:
            raise InvalidShape(f"need at least 2 descriptors, got {m}")
        if len(self.descriptor_names) != m:
            raise InvalidShape("descriptor_names length must match descriptor columns")
        if len(self.compound_ids) != n or prop.shape != (n,):
            raise InvalidShape("compound_ids and property length must match rows")
        if len(set(self.descriptor_names)) != m:
            raise DuplicateDescriptorName("descriptor names must be unique")
        bad = np.argwhere(~np.isfinite(descriptors))
        if bad.size:
            raise NonFiniteValue(int(bad[0, 0]), int(bad[0, 1]))
        bad_prop = np.flatnonzero(~np.isfinite(prop))
        if bad_prop.size:
            raise NonFiniteValue(int(bad_prop[0]), m)
        if np.ptp(prop) == 0.0:
            raise ConstantProperty("property column has zero variance")
        descriptors.flags.writeable = False
        prop.flags.writeable = False

    @property
    def n_compounds(self) -> int:
        return self.descriptors.shape[0]

    @property
    def n_descriptors(self) -> int:
        return self.descriptors.shape[1]


@dataclass(frozen=True)
class SynthResult:
    """A synthetic dataset together with its generating ground truth."""

    dataset: Dataset
    true_indices: tuple[int, ...]
    intercept: float
    coefficients: np.ndarray


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonFiniteValue(row, col, f"unparseable value {text!r} at row {row}, descriptor {col}") from None
    if not np.isfinite(value):
        raise NonFiniteValue(row, col)
    return value


def load_dataset(path, id_col: str | None = None, property_col: str | None = None) -> Dataset:
    """Load a comma-delimited dataset file.

    Format: UTF-8, first line is the header; by default column 1 holds the
    compound id and the last column the property, with descriptors in
    between. ``id_col`` / ``property_col`` override those roles by header
    name. Rows containing any non-finite or unparseable cell are rejected
    with a row-indexed error rather than imputed.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise MissingColumn("empty file: no header row")
    header = [h.strip() for h in rows[0]]
    if len(header) < 4:
        raise MissingColumn("need id, at least 2 descriptors, and a property column")

    def locate(name: str | None, default: int) -> int:
        if name is None:
            return default
        if name not in header:
            raise MissingColumn(f"column {name!r} not in header")
        return header.index(name)

    id_idx = locate(id_col, 0)
    prop_idx = locate(property_col, len(header) - 1)
    if id_idx == prop_idx:
        raise MissingColumn("id and property columns must differ")
    desc_idx = [j for j in range(len(header)) if j not in (id_idx, prop_idx)]
    names = tuple(header[j] for j in desc_idx)

    ids: list[str] = []
    matrix: list[list[float]] = []
    prop: list[float] = []
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise MissingColumn(f"row {i} has {len(row)} cells, header has {len(header)}")
        ids.append(row[id_idx].strip())
        matrix.append([_parse_cell(row[j], i, c) for c, j in enumerate(desc_idx)])
        prop.append(_parse_cell(row[prop_idx], i, len(desc_idx)))

    return Dataset(tuple(ids), names, np.array(matrix, dtype=float), np.array(prop, dtype=float))


def write_dataset(data: Dataset, path) -> None:
    """Write a dataset in the load_dataset format (17-significant-digit decimals)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_dataset(data))


def serialize_dataset(data: Dataset) -> str:
    buf = io.StringIO()
    buf.write("id," + ",".join(data.descriptor_names) + ",property\n")
    for i in range(data.n_compounds):
        cells = [data.compound_ids[i]]
        cells += [f"{v:.17g}" for v in data.descriptors[i]]
        cells.append(f"{data.property_values[i]:.17g}")
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def dataset_digest(data: Dataset) -> str:
    """Hex digest of the canonical serialization; identifies a dataset in run outputs."""
    return hashlib.sha256(serialize_dataset(data).encode("utf-8")).hexdigest()


def synth_dataset(n: int, m: int, k_true: int, noise_sd: float, seed: int) -> SynthResult:
    """Generate a synthetic descriptor dataset with a known linear ground truth.

    Descriptors are iid standard normal. The property is an intercept plus a
    linear combination of ``k_true`` randomly chosen descriptor columns
    (coefficient magnitudes in [0.5, 2], random signs) plus zero-mean Gaussian
    noise of standard deviation ``noise_sd``. Deterministic for a given seed.
    With ``noise_sd=0`` the true column subset attains r-squared exactly 1.
    """
    if k_true < 1 or n < k_true + 2 or m < max(k_true, 2):
        raise InvalidShape(f"need n >= k_true+2 and m >= max(k_true, 2); got n={n}, m={m}, k_true={k_true}")
    if noise_sd < 0:
        raise InvalidShape("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    descriptors = rng.standard_normal((n, m))
    true_idx = tuple(int(j) for j in np.sort(rng.choice(m, size=k_true, replace=False)))
    coefs = rng.uniform(0.5, 2.0, size=k_true) * rng.choice([-1.0, 1.0], size=k_true)
    intercept = float(rng.uniform(-1.0, 1.0))
    prop = intercept + descriptors[:, true_idx] @ coefs
    if noise_sd > 0:
        prop = prop + noise_sd * rng.standard_normal(n)
    width = len(str(m))
    names = tuple(f"d{j:0{width}d}" for j in range(m))
    ids = tuple(f"c{i:0{len(str(n))}d}" for i in range(n))
    data = Dataset(ids, names, descriptors, prop)
    return SynthResult(data, true_idx, intercept, coefs)
