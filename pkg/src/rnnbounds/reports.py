"""CSV writers with fixed headers per report kind."""

from __future__ import annotations

import csv
import io
import math

from .bounds import BoundReport
from .verify import TrialReport

NORM_COLUMNS = ("matrix", "spectral", "frobenius", "two_one", "stable_rank", "two_one_over_frobenius")
ASSUMPTION_COLUMNS = ("id", "passed", "measured", "threshold")
SWEEP_COLUMNS = ("target_B_U", "regime", "gap_median", "vanilla_erc", "ours", "train_ramp_risk",
                 "heldout_ramp_risk")


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return "" if v is None else str(v)


def write_csv(rows, columns, stream=None) -> str:
    """Write ``rows`` (dicts) under ``columns``; returns the text as well."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def bounds_csv(reports, stream=None) -> str:
    return write_csv((r.as_row() for r in reports), BoundReport.CSV_COLUMNS, stream)


def verify_csv(reports, stream=None) -> str:
    return write_csv((r.as_row() for r in reports), TrialReport.CSV_COLUMNS, stream)


def norms_csv(profile, stream=None) -> str:
    return write_csv(profile.rows(), NORM_COLUMNS, stream)


def assumptions_csv(report, stream=None) -> str:
    rows = ({"id": c.id, "passed": c.passed, "measured": float(c.measured),
             "threshold": float(c.threshold)} for c in report)
    return write_csv(rows, ASSUMPTION_COLUMNS, stream)


def read_csv(text: str):
    return list(csv.DictReader(io.StringIO(text)))
