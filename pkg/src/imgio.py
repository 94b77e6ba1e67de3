"""
Image and report serialization

PNM codecs (P2/P3 plain, P5/P6 binary, maxval up to 65535 with big-endian
16-bit samples), frame-sequence directories with a JSON sidecar, and CSV
metrics reports.
"""

import io
import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from .core_types import ChannelMismatch, ConfigError, DefogError, Frame, FrameSequence

PNM_FORMATS = ('P2', 'P3', 'P5', 'P6')
SUPPORTED_MAXVALS = (255, 65535)
DEFAULT_MAXVAL = 65535

SIDECAR_NAME = 'sequence.json'
FRAME_PATTERN = 'frame_{index:06d}.{ext}'

_WHITESPACE = b' \t\n\r\v\f'
_MAX_HEADER_DIGITS = 9
_PLAIN_LINE_WIDTH = 70

REPORT_COLUMNS = [
    'label', 'algorithm', 'pairing', 'normalization', 'n_frames', 'n_pairs', 'seed',
    'ssim', 'psnr_db', 'mse', 'mean_brightness_candidate', 'mean_brightness_reference',
    'contrast_candidate', 'check',
]


class PnmError(DefogError):
    pass


class BadMagic(PnmError):
    pass


class TruncatedData(PnmError):
    pass


class SampleOutOfRange(PnmError):
    pass


class BadHeader(PnmError):
    pass


# ---------------------------------------------------------------------------
# PNM
# ---------------------------------------------------------------------------

class _Tokenizer:
    """Whitespace/comment-aware reader over a PNM byte string"""

    def __init__(self, data: bytes, position: int = 0):
        self.data = data
        self.position = position

    def _skip(self):
        data, n = self.data, len(self.data)
        while self.position < n:
            byte = data[self.position:self.position + 1]
            if byte in _WHITESPACE and byte:
                self.position += 1
            elif byte == b'#':
                while self.position < n and data[self.position:self.position + 1] not in (b'\n', b'\r'):
                    self.position += 1
            else:
                break

    def token(self) -> Optional[bytes]:
        self._skip()
        start = self.position
        while self.position < len(self.data) and self.data[self.position:self.position + 1] not in _WHITESPACE \
                and self.data[self.position:self.position + 1] != b'#':
            self.position += 1
        if start == self.position:
            return None
        return self.data[start:self.position]

    def header_int(self, name: str) -> int:
        raw = self.token()
        if raw is None:
            raise TruncatedData(f"PNM header ended before {name}")
        if not raw.isdigit() or len(raw) > _MAX_HEADER_DIGITS:
            raise BadHeader(f"PNM header field {name} is not a valid integer: {raw[:20]!r}")
        return int(raw)


def read_pnm(data: bytes) -> Frame:
    """
    Decode a PNM image into a Frame with pixels = sample / maxval.

    Raises:
        BadMagic, BadHeader, TruncatedData, SampleOutOfRange
    """
    if not isinstance(data, (bytes, bytearray)):
        raise BadMagic("PNM input must be bytes")
    data = bytes(data)
    magic = data[:2].decode('ascii', errors='replace')
    if magic not in PNM_FORMATS:
        raise BadMagic(f"Unknown PNM magic number: {data[:2]!r}")

    tokens = _Tokenizer(data, 2)
    if tokens.position < len(data) and data[2:3] not in _WHITESPACE and data[2:3] != b'#':
        raise BadHeader("PNM magic number must be followed by whitespace")
    width = tokens.header_int('width')
    height = tokens.header_int('height')
    maxval = tokens.header_int('maxval')
    if width < 1 or height < 1:
        raise BadHeader(f"PNM dimensions must be positive, got {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise BadHeader(f"PNM maxval must be in 1..65535, got {maxval}")

    channels = 3 if magic in ('P3', 'P6') else 1
    count = width * height * channels

    if magic in ('P5', 'P6'):
        # exactly one whitespace byte separates the header from the raster
        if tokens.position >= len(data) or data[tokens.position:tokens.position + 1] not in _WHITESPACE:
            raise TruncatedData("PNM header is not terminated by whitespace")
        start = tokens.position + 1
        dtype = np.dtype('>u2') if maxval > 255 else np.dtype('u1')
        needed = count * dtype.itemsize
        if len(data) - start < needed:
            raise TruncatedData(f"PNM raster has {len(data) - start} bytes, expected {needed}")
        samples = np.frombuffer(data, dtype=dtype, count=count, offset=start).astype(np.int64)
    else:
        values: List[int] = []
        for _ in range(count):
            raw = tokens.token()
            if raw is None:
                raise TruncatedData(f"PNM raster has {len(values)} samples, expected {count}")
            if not raw.isdigit() or len(raw) > _MAX_HEADER_DIGITS:
                raise SampleOutOfRange(f"PNM sample is not a valid integer: {raw[:20]!r}")
            values.append(int(raw))
        samples = np.array(values, dtype=np.int64)

    if samples.size and samples.max() > maxval:
        raise SampleOutOfRange(f"PNM sample {samples.max()} exceeds maxval {maxval}")

    pixels = samples.reshape(height, width, channels).astype(np.float64) / maxval
    return Frame(pixels)


def quantize(frame: Frame, maxval: int = DEFAULT_MAXVAL) -> np.ndarray:
    """Integer samples round(pixel * maxval), half away from zero, clamped"""
    scaled = np.clip(frame.pixels, 0.0, 1.0) * maxval
    return np.clip(np.floor(scaled + 0.5), 0, maxval).astype(np.int64)


def write_pnm(frame: Frame, fmt: str = 'P5', maxval: int = DEFAULT_MAXVAL) -> bytes:
    """
    Encode a [0, 1] frame as PNM bytes.

    P2/P5 take single-channel frames, P3/P6 three-channel frames.
    """
    if fmt not in PNM_FORMATS:
        raise ConfigError(f"Unsupported PNM format: {fmt}")
    if maxval not in SUPPORTED_MAXVALS:
        raise ConfigError(f"maxval must be one of {SUPPORTED_MAXVALS}, got {maxval}")
    expected_channels = 3 if fmt in ('P3', 'P6') else 1
    if frame.channels != expected_channels:
        raise ChannelMismatch(f"{fmt} needs {expected_channels} channel(s), frame has {frame.channels}")

    samples = quantize(frame, maxval).reshape(-1)
    header = f"{fmt}\n{frame.width} {frame.height}\n{maxval}\n".encode('ascii')

    if fmt in ('P5', 'P6'):
        dtype = np.dtype('>u2') if maxval > 255 else np.dtype('u1')
        return header + samples.astype(dtype).tobytes()

    lines, current = [], ''
    for value in samples.tolist():
        text = str(value)
        if current and len(current) + 1 + len(text) > _PLAIN_LINE_WIDTH:
            lines.append(current)
            current = text
        else:
            current = f"{current} {text}" if current else text
    if current:
        lines.append(current)
    return header + ('\n'.join(lines) + '\n').encode('ascii')


def default_format(channels: int, binary: bool = True) -> str:
    if channels == 3:
        return 'P6' if binary else 'P3'
    return 'P5' if binary else 'P2'


def extension_for(fmt: str) -> str:
    return 'ppm' if fmt in ('P3', 'P6') else 'pgm'


def load_image(path: Union[str, Path]) -> Frame:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise DefogError(f"Error reading image {path}: {e}") from e
    return read_pnm(data)


def save_image(frame: Frame, path: Union[str, Path], fmt: Optional[str] = None,
               maxval: int = DEFAULT_MAXVAL) -> Path:
    path = Path(path)
    fmt = fmt or default_format(frame.channels)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_pnm(frame, fmt, maxval))
    return path


# ---------------------------------------------------------------------------
# Frame sequences on disk
# ---------------------------------------------------------------------------

def write_sequence(seq: FrameSequence, directory: Union[str, Path],
                   fog_params: Optional[Dict] = None,
                   maxval: int = DEFAULT_MAXVAL) -> Path:
    """
    Write numbered frames plus a sequence.json sidecar.

    Photon counts are divided by the sequence peak (recorded as pixel_scale)
    so every frame fits the [0, 1] sample range.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    peak = max(float(f.pixels.max()) for f in seq.frames)
    pixel_scale = peak if peak > 0 else 1.0
    fmt = default_format(seq.shape[2])

    names = []
    for index, frame in enumerate(seq.frames):
        name = FRAME_PATTERN.format(index=index, ext=extension_for(fmt))
        save_image(Frame(frame.pixels / pixel_scale), directory / name, fmt, maxval)
        names.append(name)

    sidecar = {
        'integration_time_s': seq.integration_time_s,
        'interval_s': seq.interval_s,
        'coherence_time_s': seq.coherence_time_s,
        'n_frames': len(seq.frames),
        'pixel_scale': pixel_scale,
        'format': fmt,
        'maxval': maxval,
        'frames': names,
        'fog_params': fog_params,
    }
    (directory / SIDECAR_NAME).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + '\n')
    return directory


# ---------------------------------------------------------------------------
# CSV reports
# ---------------------------------------------------------------------------

def write_csv_report(rows: Iterable[Dict]) -> bytes:
    """
    Serialize report rows as CSV with a header row.

    Columns follow REPORT_COLUMNS; floats carry 9 significant digits and an
    infinite PSNR is written as inf.
    """
    table = pd.DataFrame(list(rows), columns=REPORT_COLUMNS)
    buffer = io.StringIO()
    table.to_csv(buffer, index=False, float_format='%.9g', lineterminator='\r\n')
    return buffer.getvalue().encode('utf-8')


def read_csv_report(data: bytes) -> pd.DataFrame:
    return pd.read_csv(io.BytesIO(data))
