"""Container file format for grasp map stacks.

A stack file is a single UTF-8 JSON header line terminated by a newline,
followed by raw little-endian 32-bit float planes in header channel order:

    {"height": H, "width": W, "bins": N,
     "channels": ["q0", ..., "cos0", ..., "sin0", ..., "omega0", ...,
                  "o0", ..., "gamma"],
     "dtype": "f32", "layout": "row-major", "version": 1}

In-memory planes are float64; they are rounded to f32 on write, so a
load/save round trip of a file is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mapbuild import GraspMapStack

FORMAT_VERSION = 1


class StackFormatError(ValueError):
    """Raised for malformed stack files; names the offending header field."""


def channel_names(bins: int) -> list[str]:
    names = []
    for prefix in ("q", "cos", "sin", "omega", "o"):
        names.extend(f"{prefix}{i}" for i in range(bins))
    names.append("gamma")
    return names


def _header_dict(stack: GraspMapStack) -> dict:
    return {
        "height": stack.height,
        "width": stack.width,
        "bins": stack.bins,
        "channels": channel_names(stack.bins),
        "dtype": "f32",
        "layout": "row-major",
        "version": FORMAT_VERSION,
    }


def _planes_in_order(stack: GraspMapStack):
    for group in (stack.q, stack.cos2phi, stack.sin2phi, stack.omega, stack.o):
        for i in range(stack.bins):
            yield group[i]
    yield stack.gamma


def save_stack(stack: GraspMapStack, path: str | Path) -> None:
    """Write a stack to disk in the container format."""
    header = json.dumps(_header_dict(stack), separators=(", ", ": "))
    with open(path, "wb") as f:
        f.write(header.encode("utf-8"))
        f.write(b"\n")
        for plane in _planes_in_order(stack):
            f.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())


def _require(header: dict, key: str, expected_type) -> object:
    if key not in header:
        raise StackFormatError(f"missing header field {key!r}")
    value = header[key]
    if not isinstance(value, expected_type) or isinstance(value, bool):
        raise StackFormatError(f"header field {key!r} has invalid value {value!r}")
    return value


def load_stack(path: str | Path) -> GraspMapStack:
    """Read a stack file back into float64 planes."""
    with open(path, "rb") as f:
        header_line = f.readline()
        payload = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StackFormatError(f"unreadable header line: {exc}") from None
    if not isinstance(header, dict):
        raise StackFormatError("header is not a JSON object")

    height = _require(header, "height", int)
    width = _require(header, "width", int)
    bins = _require(header, "bins", int)
    if height <= 0 or width <= 0:
        raise StackFormatError(f"header field 'height'/'width' not positive: {height}x{width}")
    if bins < 1:
        raise StackFormatError(f"header field 'bins' must be >= 1, got {bins}")
    if _require(header, "dtype", str) != "f32":
        raise StackFormatError(f"header field 'dtype' must be 'f32', got {header['dtype']!r}")
    if _require(header, "layout", str) != "row-major":
        raise StackFormatError(
            f"header field 'layout' must be 'row-major', got {header['layout']!r}"
        )
    if _require(header, "version", int) != FORMAT_VERSION:
        raise StackFormatError(
            f"header field 'version' must be {FORMAT_VERSION}, got {header['version']!r}"
        )
    channels = _require(header, "channels", list)
    if channels != channel_names(bins):
        raise StackFormatError(
            f"header field 'channels' does not match the expected order for "
            f"{bins} bins"
        )

    plane_size = height * width * 4
    expected = plane_size * (5 * bins + 1)
    if len(payload) != expected:
        raise StackFormatError(
            f"payload holds {len(payload)} bytes, header implies {expected}"
        )
    raw = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    planes = raw.reshape(5 * bins + 1, height, width)
    return GraspMapStack(
        bins=bins,
        height=height,
        width=width,
        q=planes[0:bins].copy(),
        cos2phi=planes[bins : 2 * bins].copy(),
        sin2phi=planes[2 * bins : 3 * bins].copy(),
        omega=planes[3 * bins : 4 * bins].copy(),
        o=planes[4 * bins : 5 * bins].copy(),
        gamma=planes[5 * bins].copy(),
    )
