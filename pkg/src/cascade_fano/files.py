"""Cascade files.

Format::

    CASCADES v1 model=<discrete|continuous> p=<int> k=<int> theta0=<float> [lambda=<float> T=<float> family=<name>]
    <t_1>,...,<t_p>,<t_child>
    ...

Times are ``1``/``2``/``inf`` for discrete data and decimal floats or
``inf`` for continuous data.  Continuous headers may also carry ``sigma=``
(Rayleigh) or ``mu=`` (Weibull).  Floats are written with ``repr`` so a
write/read round trip is exact.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ColumnCountError, HeaderError, ParameterError, UnsupportedError, ValueFormatError
from .inference import Dataset
from .model import CHILD_TIME, MODELS, PARENT_TIME, ModelParams
from .transmission import TransmissionSpec

MAGIC = ("CASCADES", "v1")
_INT_KEYS = ("p", "k")
_FLOAT_KEYS = ("theta0", "lambda", "T", "sigma", "mu")
_KEYS = ("model", "family") + _INT_KEYS + _FLOAT_KEYS


def format_time(t: float, model: str) -> str:
    if math.isinf(t):
        return "inf"
    if model == "discrete":
        return str(int(t))
    return repr(float(t))


def _format_header(data: Dataset) -> str:
    parts = list(MAGIC) + [
        f"model={data.model}",
        f"p={data.params.p}",
        f"k={data.params.k}",
        f"theta0={data.params.theta0!r}",
    ]
    spec = data.spec
    if data.model == "continuous":
        if spec.lam is not None:
            parts.append(f"lambda={spec.lam!r}")
        parts.append(f"T={spec.horizon!r}")
        parts.append(f"family={spec.family}")
        if spec.sigma is not None:
            parts.append(f"sigma={spec.sigma!r}")
        if spec.mu is not None:
            parts.append(f"mu={spec.mu!r}")
    return " ".join(parts)


def dumps_cascades(data: Dataset) -> str:
    lines = [_format_header(data)]
    for row in data.times:
        lines.append(",".join(format_time(t, data.model) for t in row))
    return "\n".join(lines) + "\n"


def write_cascades(path, data: Dataset) -> None:
    Path(path).write_bytes(dumps_cascades(data).encode("utf-8"))


def _parse_header(line: str):
    tokens = line.split()
    if tuple(tokens[:2]) != MAGIC:
        raise HeaderError("expected header starting with 'CASCADES v1'", line=1)
    fields = {}
    for tok in tokens[2:]:
        key, sep, value = tok.partition("=")
        if not sep or key not in _KEYS:
            raise HeaderError(f"unrecognised header field {tok!r}", line=1)
        if key in fields:
            raise HeaderError(f"duplicate header field {key!r}", line=1)
        fields[key] = value
    for key in ("model", "p", "k", "theta0"):
        if key not in fields:
            raise HeaderError(f"header is missing {key}=", line=1)
    model = fields["model"]
    if model not in MODELS:
        raise HeaderError(f"unknown model {model!r}", line=1)
    try:
        for key in _INT_KEYS:
            fields[key] = int(fields[key])
        for key in _FLOAT_KEYS:
            if key in fields:
                fields[key] = float(fields[key])
    except ValueError as exc:
        raise HeaderError(f"bad numeric header value: {exc}", line=1) from None
    try:
        params = ModelParams(fields["p"], fields["k"], fields["theta0"])
        spec = None
        if model == "continuous":
            if "T" not in fields or "family" not in fields:
                raise HeaderError("continuous header needs T= and family=", line=1)
            spec = TransmissionSpec(
                fields["family"], fields["T"], lam=fields.get("lambda"),
                sigma=fields.get("sigma"), mu=fields.get("mu"),
            )
        elif any(key in fields for key in ("lambda", "T", "family", "sigma", "mu")):
            raise HeaderError("transmission fields given for a discrete model", line=1)
    except (ParameterError, UnsupportedError) as exc:
        raise HeaderError(str(exc), line=1) from None
    return params, model, spec


def _parse_value(text: str, lineno: int) -> float:
    text = text.strip()
    if text == "inf":
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise ValueFormatError(f"cannot parse time {text!r}", line=lineno) from None
    if not math.isfinite(value):
        raise ValueFormatError(f"time {text!r} is not finite; use 'inf' for never", line=lineno)
    return value


def _check_row(row: list[float], model: str, spec, lineno: int) -> None:
    parents, child = row[:-1], row[-1]
    if model == "discrete":
        if any(t != PARENT_TIME and not math.isinf(t) for t in parents):
            raise ValueFormatError("discrete parent times must be 1 or inf", line=lineno)
        if child != CHILD_TIME and not math.isinf(child):
            raise ValueFormatError("discrete child time must be 2 or inf", line=lineno)
        return
    T = spec.horizon
    if any(not math.isinf(t) and not (0.0 <= t <= T) for t in parents):
        raise ValueFormatError(f"parent time outside [0, {T}]", line=lineno)
    if not math.isinf(child) and not (T <= child <= 2 * T):
        raise ValueFormatError(f"child time outside [{T}, {2 * T}]", line=lineno)


def loads_cascades(text: str) -> Dataset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise HeaderError("empty cascade file", line=1)
    params, model, spec = _parse_header(lines[0])
    width = params.p + 1
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != width:
            raise ColumnCountError(f"expected {width} values, found {len(fields)}", line=lineno)
        row = [_parse_value(f, lineno) for f in fields]
        _check_row(row, model, spec, lineno)
        rows.append(row)
    times = np.array(rows, dtype=float).reshape(len(rows), width)
    return Dataset(params, model, times, spec)


def read_cascades(path) -> Dataset:
    try:
        text = Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueFormatError(f"cascade file is not UTF-8: {exc}") from None
    return loads_cascades(text)
