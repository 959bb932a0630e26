"""Read-only access to the harness CSV schema."""

import csv
import re

EXPECTED_COLUMNS = [
    "preset",
    "spectrum_id",
    "block_size",
    "delta",
    "ortho_policy",
    "trial_index",
    "matvecs",
    "eps_empirical_raw",
    "eps_empirical_floored",
]

_GAP_PATTERN = re.compile(r"g=([0-9eE+.\-]+)")


class SchemaError(ValueError):
    """The CSV does not carry the expected harness columns."""


def load_records(path):
    """Parse a harness CSV; returns (header, list of typed row dicts)."""
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in EXPECTED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"missing columns: {', '.join(missing)}")
        rows = []
        for raw in reader:
            rows.append({
                "preset": raw["preset"],
                "spectrum_id": raw["spectrum_id"],
                "block_size": int(raw["block_size"]),
                "delta": float(raw["delta"]) if raw["delta"] else None,
                "ortho_policy": raw["ortho_policy"],
                "trial_index": int(raw["trial_index"]),
                "matvecs": int(raw["matvecs"]),
                "eps_empirical_raw": float(raw["eps_empirical_raw"]),
                "eps_empirical_floored": float(raw["eps_empirical_floored"]),
            })
    return header, rows


def gap_size(row):
    """Gap parameter parsed out of a paired-gap spectrum id."""
    match = _GAP_PATTERN.search(row["spectrum_id"])
    if not match:
        raise SchemaError(f"no gap size in spectrum_id {row['spectrum_id']!r}")
    return float(match.group(1))


def derive_x(row, x):
    """Value of the x-axis field; derived fields come from the schema."""
    if x == "matvecs":
        return row["matvecs"]
    if x == "iterations":
        return row["matvecs"] // max(row["block_size"], 1) - 1
    if x == "gap_size":
        return gap_size(row)
    raise SchemaError(f"unknown x-axis field {x!r}")
