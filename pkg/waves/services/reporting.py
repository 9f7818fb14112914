"""
Report Emission

JSON reports (sorted keys, two-space indent, shortest round-trip floats,
non-finite numbers as null) and plot-ready CSV files with the same
shortest round-trip floats.
"""

import csv
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder

logger = logging.getLogger(__name__)


class ReportEncoder(DjangoJSONEncoder):
    """DjangoJSONEncoder that also knows numpy values and fractions."""

    def default(self, o):
        if isinstance(o, np.ndarray):
            return to_jsonable(o.tolist())
        if isinstance(o, np.generic):
            return to_jsonable(o.item())
        if isinstance(o, Fraction):
            return f'{o.numerator}/{o.denominator}'
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def to_jsonable(value: Any) -> Any:
    """Plain Python structure with non-finite floats replaced by None."""
    if hasattr(value, 'to_dict') and callable(value.to_dict):
        value = value.to_dict()
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def render_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), cls=ReportEncoder, sort_keys=True,
                      indent=2, allow_nan=False) + '\n'


def dump_json(payload: Any, path: Optional[Union[str, Path]] = None) -> str:
    """Render the payload and, when a path is given, write it there."""
    text = render_json(payload)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        logger.debug("Wrote %s", path)
    return text


def write_csv(path: Union[str, Path], header: Sequence[str], columns: Sequence) -> Path:
    """Columns of equal length written side by side with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        writer.writerows([repr(float(v)) for v in row] for row in data)
    logger.debug("Wrote %s (%d rows)", path, data.shape[0])
    return path
