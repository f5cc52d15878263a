"""Binary tensor/mask files, graymap export and key-value config/report files.

``MGT1`` tensor file::

    b"MGT1" | order: u8 | dims: order x u32 LE | payload: prod(dims) x f64 LE

``MGM1`` mask file has the same header with magic ``b"MGM1"`` and one
byte (0 or 1) per entry. Payloads are linearized with the first index
varying fastest.
"""

from __future__ import annotations

import dataclasses
import struct
from pathlib import Path

import numpy as np

from .fctn import FctnRankTable
from .pipeline import PipelineConfig, RecoveryReport, config_to_dict

TENSOR_MAGIC = b"MGT1"
MASK_MAGIC = b"MGM1"
MAX_ENTRIES = 1 << 40


class FormatError(ValueError):
    """Malformed tensor, mask or config file."""


class BadMagicError(FormatError):
    pass


class TruncatedFileError(FormatError):
    def __init__(self, path, expected, actual):
        super().__init__(f"{path}: truncated file, expected {expected} bytes, got {actual}")
        self.expected = expected
        self.actual = actual


def _header(magic, shape):
    if not 1 <= len(shape) <= 255:
        raise ValueError(f"cannot store a tensor of order {len(shape)}")
    if any(d < 1 or d >= 1 << 32 for d in shape):
        raise ValueError(f"dimensions {shape} do not fit the file header")
    return magic + struct.pack("<B", len(shape)) + struct.pack(f"<{len(shape)}I", *shape)


def _write(path, magic, array, dtype):
    payload = np.asarray(array).astype(dtype).tobytes(order="F")
    Path(path).write_bytes(_header(magic, array.shape) + payload)


def _read(path, magic, itemsize):
    raw = Path(path).read_bytes()
    if len(raw) < 5:
        raise TruncatedFileError(path, 5, len(raw))
    if raw[:4] != magic:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}, expected {magic!r}")
    order = raw[4]
    if order == 0:
        raise FormatError(f"{path}: tensor order 0")
    head = 5 + 4 * order
    if len(raw) < head:
        raise TruncatedFileError(path, head, len(raw))
    dims = struct.unpack(f"<{order}I", raw[5:head])
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero-length dimension in {dims}")
    total = 1
    for d in dims:
        total *= d
    if total > MAX_ENTRIES:
        raise FormatError(f"{path}: dimensions {dims} overflow the supported size")
    expected = head + total * itemsize
    if len(raw) < expected:
        raise TruncatedFileError(path, expected, len(raw))
    if len(raw) > expected:
        raise FormatError(f"{path}: {len(raw) - expected} trailing bytes after payload")
    return dims, raw[head:]


def save_tensor(path, t):
    t = np.asarray(t, dtype=np.float64)
    _write(path, TENSOR_MAGIC, t, "<f8")


def load_tensor(path) -> np.ndarray:
    dims, payload = _read(path, TENSOR_MAGIC, 8)
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return np.reshape(flat, dims, order="F")


def save_mask(path, mask):
    mask = np.asarray(mask, dtype=bool)
    _write(path, MASK_MAGIC, mask, np.uint8)


def load_mask(path) -> np.ndarray:
    dims, payload = _read(path, MASK_MAGIC, 1)
    flat = np.frombuffer(payload, dtype=np.uint8)
    if np.any(flat > 1):
        raise FormatError(f"{path}: mask payload holds bytes other than 0 and 1")
    return np.reshape(flat.astype(bool), dims, order="F")


def import_raw(path, dims, dtype="<f8", order="F") -> np.ndarray:
    """Read a headerless little-endian float array of shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    dtype = np.dtype(dtype).newbyteorder("<")
    raw = Path(path).read_bytes()
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(raw) != expected:
        raise TruncatedFileError(path, expected, len(raw))
    return np.reshape(np.frombuffer(raw, dtype=dtype).astype(np.float64), dims, order=order)


def export_band(t, band: int, path):
    """Write one band as a binary PGM, scaled by the whole tensor's min/max."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3 or not 0 <= band < t.shape[2]:
        raise ValueError(f"band {band} does not exist in a cube of shape {t.shape}")
    lo, hi = float(t.min()), float(t.max())
    img = t[:, :, band]
    if hi > lo:
        img = np.rint((img - lo) / (hi - lo) * 255.0)
    else:
        img = np.zeros_like(img)
    img = np.clip(img, 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes(order="C"))


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    fields = raw.split(maxsplit=4)
    if fields[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval > 255:
        raise FormatError(f"{path}: 16-bit PGM not supported")
    data = raw[len(raw) - width * height:]
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width)


# ---------------------------------------------------------------- key-value text

def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def dump_keyvalues(items: dict) -> str:
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in items.items())


def parse_keyvalues(text: str, source="<text>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_field(name, text, default):
    if text.lower() == "none":
        return None
    if name == "ranks":
        values = [int(v) for v in text.split(",")]
        return values[0] if len(values) == 1 else values
    if name == "alpha":
        return tuple(float(v) for v in text.split(","))
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float) or default is None:
        return float(text)
    return text


def _ranks_from_upper(values):
    if values is None or isinstance(values, (int, FctnRankTable)):
        return values
    # solve n(n-1)/2 = len(values)
    n = int(round((1 + (1 + 8 * len(values)) ** 0.5) / 2))
    return FctnRankTable.from_upper(n, values)


def config_from_dict(items: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    """Apply flat ``{key: text}`` overrides onto ``base``."""
    base = base or PipelineConfig()
    top, nested = {}, {"coarse": {}, "fctn_init": {}, "fctn_group": {}}
    defaults = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
    for key, text in items.items():
        if key.startswith("config."):
            key = key[len("config."):]
        head, _, sub = key.partition(".")
        if head not in defaults:
            raise FormatError(f"unknown config key {key!r}")
        try:
            if sub:
                if head not in nested:
                    raise FormatError(f"{head!r} has no sub-keys")
                sub_default = getattr(defaults[head], sub, dataclasses.MISSING)
                if sub_default is dataclasses.MISSING:
                    raise FormatError(f"unknown config key {key!r}")
                nested[head][sub] = _parse_field(sub, text, sub_default)
            else:
                top[head] = _parse_field(head, text, defaults[head])
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"bad value for {key!r}: {exc}") from exc
    for head, subs in nested.items():
        if subs:
            if "ranks" in subs:
                subs["ranks"] = _ranks_from_upper(subs["ranks"])
            top[head] = dataclasses.replace(defaults[head], **subs)
    return dataclasses.replace(base, **top)


def load_config(path) -> PipelineConfig:
    """Read a config file; a recovery report is accepted too (its ``config.*`` keys)."""
    items = parse_keyvalues(Path(path).read_text(), str(path))
    if any(k.startswith("config.") for k in items):
        items = {k: v for k, v in items.items() if k.startswith("config.")}
    return config_from_dict(items)


def save_config(path, config: PipelineConfig):
    Path(path).write_text(dump_keyvalues(config_to_dict(config)))


def report_to_text(report: RecoveryReport) -> str:
    items = {}
    for n, (name, seconds) in enumerate(report.stages):
        items[f"stage.{n}.name"] = name
        items[f"stage.{n}.seconds"] = seconds
    for u, change in enumerate(report.round_changes, 1):
        items[f"round.{u}.relative_change"] = change
    items["realized_rate"] = report.realized_rate
    items["seed"] = report.seed
    items["rng_algorithm"] = report.rng_algorithm
    if report.metrics is not None:
        for key, value in report.metrics.as_dict().items():
            items[f"metrics.{key}"] = value
    for key, value in report.config.items():
        items[f"config.{key}"] = value
    return dump_keyvalues(items)

