import json
import math
from pathlib import Path
from typing import Any, Optional, TextIO

import numpy as np
import pandas as pd
from pydantic import BaseModel

from core.settings import settings


def serialize(obj: Any) -> Any:
    """
    Plain JSON-ready structure: models dumped, numpy scalars and arrays
    unwrapped, paths as text. Non-finite floats become "inf", "-inf" and "nan",
    the spellings the config files and CSV output use.
    """
    if isinstance(obj, BaseModel):
        return serialize(obj.model_dump())
    if isinstance(obj, dict):
        return {str(k): serialize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [serialize(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return serialize(obj.tolist())
    if isinstance(obj, np.generic):
        return serialize(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, complex):
        return {"re": serialize(obj.real), "im": serialize(obj.imag)}
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def csv_float_format() -> str:
    """Fixed scientific notation with CSV_DIGITS significant digits"""
    return f"%.{settings.CSV_DIGITS - 1}e"


def to_csv_text(rows: list[dict[str, Any]], columns: Optional[list[str]] = None) -> str:
    frame = pd.DataFrame(rows, columns=columns)
    return frame.to_csv(index=False, float_format=csv_float_format(), lineterminator="\n", na_rep="nan")


def to_json_text(config_echo: Any, results: list[dict[str, Any]], runtime_s: float, **extra: Any) -> str:
    """
    {config_echo, results, metadata: {version, runtime_s}}, strict JSON

    json writes floats with repr, the shortest text that parses back to the
    same double.
    """
    document = {
        "config_echo": serialize(config_echo),
        "results": serialize(results),
        "metadata": {"version": settings.VERSION, "runtime_s": runtime_s, **serialize(extra)},
    }
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def write_text(text: str, path: Optional[Path], stream: TextIO) -> None:
    if path is None:
        stream.write(text)
        stream.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def relative_deviation(value: float, reference: float) -> float:
    if reference == 0:
        return 0.0 if value == 0 else math.inf
    return abs(value - reference) / abs(reference)
