# Copyright 2026 The gpsosc Authors
# SPDX-License-Identifier: Apache-2.0
"""GPS ping oscillation detection."""

import json as _json
import os as _os

from ._gpsosc import (
    ConfigError,
    ContractError,
    DetectionConfig,
    DetectionResult,
    Error,
    GenerationError,
    InputDomainError,
    IoError,
    OrderingError,
    ParseError,
    Ping,
    Removal,
    Trace,
    build_trace,
    decode_geohash,
    derive_t_min,
    detect,
    detect_all,
    distance,
    encode_geohash,
    read_traces,
    synth,
)
from ._gpsosc import clean_files as _clean_files


def clean_files(inputs, output, config=None, schema="", audit=False, workers=0, timing=True):
    """Cleans delimited ping files and returns the run report as a dict."""
    if isinstance(inputs, (str, _os.PathLike)):
        inputs = [inputs]
    cfg = config if config is not None else DetectionConfig()
    report = _clean_files(list(map(str, inputs)), str(output), cfg, schema, audit, workers, timing)
    return _json.loads(report)


__all__ = [
    "ConfigError",
    "ContractError",
    "DetectionConfig",
    "DetectionResult",
    "Error",
    "GenerationError",
    "InputDomainError",
    "IoError",
    "OrderingError",
    "ParseError",
    "Ping",
    "Removal",
    "Trace",
    "build_trace",
    "clean_files",
    "decode_geohash",
    "derive_t_min",
    "detect",
    "detect_all",
    "distance",
    "encode_geohash",
    "read_traces",
    "synth",
]
