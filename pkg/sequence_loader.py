"""
Robust frame-sequence loading
Handles missing sidecars, placeholder files and partial directories
"""

import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from src.core_types import DefogError, Frame, FrameSequence, validate_sequence
from src.imgio import PNM_FORMATS, SIDECAR_NAME, read_pnm

# Placeholder files left behind by large-file storage checkouts
PLACEHOLDER_MARKERS = [b'version https://git-lfs.github.com', b'oid sha256:']


class SequenceLoader:
    """Sequence directory loader with a sidecar-less fallback"""

    def __init__(self, directory: Union[str, Path], verbose: bool = True):
        self.directory = Path(directory)
        self.verbose = verbose

    def _status(self, message: str):
        if self.verbose:
            print(message, file=sys.stderr)

    def read_sidecar(self) -> Optional[Dict]:
        """Parsed sequence.json, or None when it is missing"""
        path = self.directory / SIDECAR_NAME
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text())
        except (OSError, ValueError) as e:
            raise DefogError(f"Error loading sidecar {path}: {e}") from e

    def check_sidecar(self, sidecar) -> Dict:
        """Reject sidecars whose structure or field types are wrong"""
        path = self.directory / SIDECAR_NAME
        if not isinstance(sidecar, dict):
            raise DefogError(f"Sidecar {path} must be a JSON object, got {type(sidecar).__name__}")
        frames = sidecar.get('frames', [])
        if not isinstance(frames, list) or not all(isinstance(name, str) for name in frames):
            raise DefogError(f"Sidecar {path}: 'frames' must be a list of file names")
        for key in ('integration_time_s', 'interval_s', 'coherence_time_s', 'pixel_scale'):
            if key not in sidecar:
                continue
            value = sidecar[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DefogError(f"Sidecar {path}: '{key}' must be a number, got {value!r}")
        return sidecar

    def discover_frame_files(self) -> List[Path]:
        """frame_*.pgm / frame_*.ppm files in name order"""
        files = sorted(self.directory.glob('frame_*.pgm')) + sorted(self.directory.glob('frame_*.ppm'))
        return sorted(files, key=lambda p: p.name)

    def check_frame_files(self, files: List[Path]) -> bool:
        """Check every file exists and starts like a PNM image rather than a placeholder"""
        for path in files:
            if not path.exists():
                self._status(f"❌ Missing frame file: {path.name}")
                return False
            with open(path, 'rb') as f:
                first_bytes = f.read(200)
            if any(marker in first_bytes for marker in PLACEHOLDER_MARKERS):
                self._status(f"⚠️ {path.name} appears to be a storage pointer, not an image")
                return False
            if first_bytes[:2].decode('ascii', errors='replace') not in PNM_FORMATS:
                self._status(f"⚠️ {path.name} does not start with a PNM magic number")
                return False
        return True

    def load_frame_file(self, path: Path, pixel_scale: float) -> Frame:
        try:
            frame = read_pnm(path.read_bytes())
        except OSError as e:
            raise DefogError(f"Error loading {path.name}: {e}") from e
        return Frame(frame.pixels * pixel_scale)

    def load(self) -> Tuple[FrameSequence, Dict]:
        """
        Load the sequence and its sidecar.

        Without sequence.json the frames are discovered by name and default
        timing (1/30 s exposure, 1 s interval, zero coherence time) is used.

        Returns:
            (sequence, sidecar dictionary)
        """
        if not self.directory.is_dir():
            raise DefogError(f"Sequence directory not found: {self.directory}")

        sidecar = self.read_sidecar()
        if sidecar is None:
            self._status(f"⚠️ No {SIDECAR_NAME} in {self.directory}, using default timing")
            files = self.discover_frame_files()
            sidecar = {
                'integration_time_s': 1.0 / 30.0,
                'interval_s': 1.0,
                'coherence_time_s': 0.0,
                'pixel_scale': 1.0,
                'frames': [p.name for p in files],
                'fog_params': None,
            }
        else:
            sidecar = self.check_sidecar(sidecar)
            files = [self.directory / name for name in sidecar.get('frames', [])]

        self._status(f"🔍 Loading {len(files)} frames from {self.directory}")
        if not self.check_frame_files(files):
            raise DefogError(f"Sequence directory {self.directory} has invalid frame files")

        pixel_scale = float(sidecar.get('pixel_scale', 1.0))
        frames = [self.load_frame_file(path, pixel_scale) for path in files]
        try:
            seq = FrameSequence(
                frames=tuple(frames),
                integration_time_s=float(sidecar.get('integration_time_s', 1.0 / 30.0)),
                interval_s=float(sidecar.get('interval_s', 1.0)),
                coherence_time_s=float(sidecar.get('coherence_time_s', 0.0)),
            )
        except (TypeError, ValueError) as e:
            raise DefogError(f"Error loading sequence timing: {e}") from e
        validate_sequence(seq)
        self._status(f"✅ Sequence loaded: {len(seq)} frames, shape {seq.shape}")
        return seq, sidecar


def load_sequence(directory: Union[str, Path], verbose: bool = True) -> Tuple[FrameSequence, Dict]:
    """Convenience wrapper around SequenceLoader"""
    return SequenceLoader(directory, verbose=verbose).load()
