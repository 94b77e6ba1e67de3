"""
Command-line front end

Subcommands: simulate, defog, metrics, pipeline, conditions, fluctuation.
Exit codes: 0 success, 1 usage/IO/validation error, 2 condition enforcement.
Status lines go to stderr; stdout only carries CSV payloads.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src import __version__
from src.core_types import (
    Algorithm,
    ConditionsNotMet,
    ConfigError,
    DefogError,
    FogParams,
    Frame,
    Normalization,
    Pairing,
    ReconConfig,
    TooFewFrames,
)
from src.fogsim import (
    ConditionReport,
    check_conditions,
    exposure_scaled,
    simulate_sequence,
    to_photon_counts,
    worker_count,
)
from src.imgio import load_image, save_image, write_csv_report, write_sequence
from src.metrics import evaluate
from src.recon import ReconResult, make_pairs, normalize_display, partition_means, reconstruct
from src.targets import TARGETS, load_target
from sequence_loader import load_sequence

from app.diagnostics import get_condition_recommendations, get_sweep_recommendations
from app.reports import frame_csv, sort_rows, summarize_fluctuation, summarize_sweep

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / 'configs' / 'default_run.json'

_FOG_KEYS = [f.name for f in fields(FogParams)]

FLUCTUATION_COLUMNS = [
    'integration_time_s', 'frame_index', 'ssim', 'psnr_db', 'mse',
    'mean_brightness_candidate', 'mean_brightness_reference', 'contrast_candidate',
]


@dataclass
class RunConfig:
    """Flat run configuration; fog and reconstruction keys mirror FogParams/ReconConfig"""
    # fog
    beta0: float = 2.5
    beta_sigma: float = 0.3
    d: float = 0.6
    ambient_mean: float = 160.0
    ambient_sigma: float = 0.3
    k_factor: float = 1.0
    shot_noise: bool = True
    seed: int = 1
    n_frames: int = 20
    spatial_beta: bool = False
    integration_time_s: float = 1.0 / 30.0
    interval_s: float = 1.0
    photon_scale: float = 200.0
    # reconstruction
    algorithm: str = 'pnfc'
    pairing: str = 'disjoint-adjacent'
    normalization: str = 'sqrt-minmax'
    # conditions and metrics
    epsilon: float = 1e-3
    require_conditions: bool = False
    maxval: int = 65535
    # paths
    target: str = 'letter-g'
    out: str = 'output'
    input: Optional[str] = None
    candidate: Optional[str] = None
    reference: Optional[str] = None
    # studies
    sweep: List[int] = field(default_factory=lambda: [10, 100, 200, 300])
    seeds: List[int] = field(default_factory=lambda: [1])
    integration_times: List[float] = field(default_factory=lambda: [1.0 / 30.0, 1.0 / 50.0, 1.0 / 150.0])
    quiet: bool = False

    def fog_params(self, **changes) -> FogParams:
        data = {key: getattr(self, key) for key in _FOG_KEYS}
        data.update(changes)
        return FogParams(**data).validate()

    def recon_config(self, algorithm: Optional[str] = None) -> ReconConfig:
        return ReconConfig(algorithm=algorithm or self.algorithm, pairing=self.pairing,
                           normalization=self.normalization)

    def validate(self) -> 'RunConfig':
        self.fog_params()
        self.recon_config()
        if not self.epsilon >= 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.maxval not in (255, 65535):
            raise ConfigError(f"maxval must be 255 or 65535, got {self.maxval}")
        if not self.sweep or any(int(n) < 2 for n in self.sweep):
            raise TooFewFrames(f"Every sweep count must be >= 2, got {self.sweep}")
        if not self.seeds:
            raise ConfigError("At least one seed is required")
        if any(t <= 0 for t in self.integration_times):
            raise ConfigError("Integration times must be > 0")
        if self.input and Path(self.input).resolve() == Path(self.out).resolve():
            raise ConfigError("Output directory must differ from the input sequence directory")
        return self

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'RunConfig':
        if 'config' in data and isinstance(data['config'], dict):
            data = data['config']
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
        return cls(**data)


def load_config_file(path) -> Dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(f"Error loading config {path}: {e}") from e


def _status(config: RunConfig, message: str):
    if not config.quiet:
        print(message, file=sys.stderr)


def _write_run_json(config: RunConfig, command: str, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {'command': command, 'version': __version__, 'config': config.to_dict()}
    (out_dir / 'run.json').write_text(json.dumps(record, indent=2, sort_keys=True) + '\n')


def _load_clean_target(config: RunConfig) -> Frame:
    if config.target in TARGETS:
        return load_target(config.target)
    return load_image(config.target)


def reference_image(clean: Frame) -> Frame:
    """Fog-free target scaled to [0, 1] by its own peak"""
    peak = float(clean.pixels.max())
    if peak == 0:
        return clean
    return Frame(clean.pixels / peak)


def _print_conditions(config: RunConfig, report: ConditionReport):
    _status(config, "📊 Condition report:")
    _status(config, f"   (i)  fluctuation present: {report.condition_i_holds} "
                    f"(relative deviation {report.mean_frame_deviation:.6g}, epsilon {report.epsilon:g})")
    _status(config, f"   (ii) interval > coherence time: {report.condition_ii_holds} "
                    f"({report.interval_s:g} s vs {report.coherence_time_s:g} s)")
    _status(config, f"   lag-1 residual autocorrelation: {report.ambient_autocorr:+.4f}")
    for line in get_condition_recommendations(report):
        _status(config, f"   {line}")


def _enforce(config: RunConfig, report: ConditionReport):
    if config.require_conditions and not report.all_hold:
        raise ConditionsNotMet("Conditions (i)/(ii) are not met and --require-conditions is set")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(config: RunConfig) -> int:
    """Render a foggy sequence of the target into config.out"""
    params = config.fog_params()
    clean = _load_clean_target(config)
    target = to_photon_counts(clean, params.photon_scale)

    _status(config, f"🚀 Simulating {params.n_frames} frames of '{config.target}' (seed {params.seed})")
    seq = simulate_sequence(target, params)
    out_dir = Path(config.out)
    write_sequence(seq, out_dir, fog_params=params.to_dict(), maxval=config.maxval)
    _write_run_json(config, 'simulate', out_dir)
    _status(config, f"✅ Wrote {len(seq)} frames to {out_dir}")

    report = check_conditions(seq, config.epsilon)
    _print_conditions(config, report)
    _enforce(config, report)
    return 0


def _raw_for_display(raw: Frame) -> Tuple[Frame, float]:
    peak = float(raw.pixels.max())
    if peak == 0:
        return raw, 1.0
    return Frame(raw.pixels / peak), peak


def cmd_defog(config: RunConfig) -> int:
    """Reconstruct a defogged image from a sequence directory"""
    if not config.input:
        raise ConfigError("defog needs --input <sequence directory>")
    seq, _ = load_sequence(config.input, verbose=not config.quiet)

    report = check_conditions(seq, config.epsilon)
    _print_conditions(config, report)
    _enforce(config, report)

    recon_config = config.recon_config()
    result = reconstruct(seq, recon_config)
    out_dir = Path(config.out)
    save_image(result.image, out_dir / _image_name('reconstruction', result.image), maxval=config.maxval)
    raw_display, raw_scale = _raw_for_display(result.raw)
    save_image(raw_display, out_dir / _image_name('raw', raw_display), maxval=config.maxval)

    sidecar = dict(recon_config.to_dict(), n_pairs=result.n_pairs, n_frames=len(seq),
                   raw_scale=raw_scale, conditions=report.to_dict())
    (out_dir / 'result.json').write_text(json.dumps(sidecar, indent=2, sort_keys=True) + '\n')
    _write_run_json(config, 'defog', out_dir)
    _status(config, f"✅ {result.algorithm.value} reconstruction from {result.n_pairs} pairs written to {out_dir}")
    return 0


def _image_name(stem: str, frame: Frame) -> str:
    return f"{stem}.{'ppm' if frame.channels == 3 else 'pgm'}"


def cmd_metrics(config: RunConfig) -> int:
    """Compare a candidate image with a reference; one CSV row to stdout or --out file"""
    if not config.candidate or not config.reference:
        raise ConfigError("metrics needs --candidate and --reference image paths")
    candidate = load_image(config.candidate)
    reference = load_image(config.reference)
    report = evaluate(candidate, reference)
    row = dict(report.to_dict(), label=Path(config.candidate).name)
    payload = write_csv_report([row])

    if config.out and config.out.endswith('.csv'):
        Path(config.out).parent.mkdir(parents=True, exist_ok=True)
        Path(config.out).write_bytes(payload)
        _status(config, f"✅ Metrics written to {config.out}")
    else:
        sys.stdout.write(payload.decode('utf-8'))
        sys.stdout.flush()
    return 0


def closed_form_check(seq, algorithm: Algorithm, raw: Frame, pairing) -> str:
    """'pass'/'fail' for zero-fluctuation sequences, '' when the sequence fluctuates"""
    stack = seq.stack()
    if not np.all(stack == stack[0]):
        return ''
    p1, p2 = partition_means(seq, make_pairs(len(seq), pairing))
    expected = p1.pixels * p2.pixels
    if algorithm is Algorithm.PNFC:
        expected = 4.0 * expected
    ok = np.allclose(raw.pixels, expected, rtol=1e-12, atol=0.0)
    return 'pass' if ok else 'fail'


def run_cell(config: RunConfig, clean: Frame, n_frames: int, seed: int,
             out_dir: Path) -> List[Dict]:
    """One sweep cell: simulate, reconstruct with pnc and pnfc, score both"""
    params = config.fog_params(n_frames=int(n_frames), seed=int(seed))
    target = to_photon_counts(clean, params.photon_scale)
    reference = reference_image(clean)
    seq = simulate_sequence(target, params, n_jobs=1)

    cell_dir = out_dir / 'cells' / f"n{int(n_frames):04d}_seed{int(seed)}"
    rows = []
    for algorithm in (Algorithm.PNC, Algorithm.PNFC):
        recon_config = config.recon_config(algorithm.value)
        result: ReconResult = reconstruct(seq, recon_config)
        save_image(result.image, cell_dir / _image_name(f"reconstruction_{algorithm.value}", result.image),
                   maxval=config.maxval)
        report = evaluate(result.image, reference)
        rows.append(dict(
            report.to_dict(),
            label=f"{algorithm.value}_n{int(n_frames)}_seed{int(seed)}",
            algorithm=algorithm.value,
            pairing=recon_config.pairing.value,
            normalization=recon_config.normalization.value,
            n_frames=int(n_frames),
            n_pairs=result.n_pairs,
            seed=int(seed),
            check=closed_form_check(seq, algorithm, result.raw, recon_config.pairing),
        ))
    return rows


def _safe_cell(config, clean, n_frames, seed, out_dir):
    try:
        return run_cell(config, clean, n_frames, seed, out_dir), None
    except (DefogError, OSError) as e:
        return [], f"N={n_frames} seed={seed}: {e}"


def cmd_pipeline(config: RunConfig) -> int:
    """Measurement-count sweep: every (N, seed) cell with both correlation estimators"""
    clean = _load_clean_target(config)
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = [(int(n), int(s)) for n in config.sweep for s in config.seeds]
    _status(config, f"🚀 Sweep over {len(cells)} cells (N in {config.sweep}, seeds {config.seeds})")

    jobs = Parallel(n_jobs=worker_count(), prefer='threads', return_as='generator')(
        delayed(_safe_cell)(config, clean, n, s, out_dir) for n, s in cells
    )
    rows, failures = [], []
    for cell_rows, failure in tqdm(jobs, total=len(cells), desc='sweep', disable=config.quiet,
                                   file=sys.stderr):
        rows.extend(cell_rows)
        if failure:
            failures.append(failure)

    rows = sort_rows(rows)
    (out_dir / 'sweep.csv').write_bytes(write_csv_report(rows))
    summary = summarize_sweep(rows)
    (out_dir / 'sweep_summary.csv').write_bytes(frame_csv(summary))
    _write_run_json(config, 'pipeline', out_dir)

    _status(config, f"📊 {len(rows)} result rows written to {out_dir / 'sweep.csv'}")
    for line in get_sweep_recommendations(summary):
        _status(config, f"   {line}")
    if failures:
        for failure in failures:
            _status(config, f"❌ Cell failed: {failure}")
        return 1
    return 0


def cmd_conditions(config: RunConfig) -> int:
    """Check conditions (i) and (ii) on a sequence directory"""
    if not config.input:
        raise ConfigError("conditions needs --input <sequence directory>")
    seq, _ = load_sequence(config.input, verbose=not config.quiet)
    report = check_conditions(seq, config.epsilon)
    _print_conditions(config, report)
    _enforce(config, report)
    return 0


def cmd_fluctuation(config: RunConfig) -> int:
    """Per-frame SSIM/PSNR of foggy frames against the target for several integration times"""
    clean = _load_clean_target(config)
    reference = reference_image(clean)
    base = config.fog_params()
    rows = []
    for integration_time in config.integration_times:
        params = exposure_scaled(base, integration_time, reference_s=base.integration_time_s)
        seq = simulate_sequence(to_photon_counts(clean, params.photon_scale), params)
        for index, frame in enumerate(seq.frames):
            report = evaluate(normalize_display(frame, Normalization.MINMAX), reference)
            rows.append(dict(report.to_dict(), integration_time_s=integration_time, frame_index=index))
        _status(config, f"🔍 Δt = {integration_time:.6g} s: {len(seq)} frames scored")

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = pd.DataFrame(rows, columns=FLUCTUATION_COLUMNS)
    (out_dir / 'fluctuation.csv').write_bytes(frame_csv(table))
    (out_dir / 'fluctuation_summary.csv').write_bytes(frame_csv(summarize_fluctuation(rows)))
    _write_run_json(config, 'fluctuation', out_dir)
    _status(config, f"✅ Integration-time study written to {out_dir}")
    return 0


COMMANDS = {
    'simulate': cmd_simulate,
    'defog': cmd_defog,
    'metrics': cmd_metrics,
    'pipeline': cmd_pipeline,
    'conditions': cmd_conditions,
    'fluctuation': cmd_fluctuation,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as ConfigError (exit code 1)"""

    def error(self, message):
        raise ConfigError(message)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _float_list(text: str) -> List[float]:
    values = []
    try:
        for v in text.split(','):
            v = v.strip()
            if not v:
                continue
            if '/' in v:
                num, den = v.split('/', 1)
                values.append(float(num) / float(den))
            else:
                values.append(float(v))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")
    return values


# flag -> RunConfig key
_FLAG_KEYS = {
    'frames': 'n_frames', 'normalize': 'normalization', 'integration_time': 'integration_time_s',
    'interval': 'interval_s',
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--config', help='JSON configuration (or a previous run.json)')
    common.add_argument('--target', help=f"target image path or one of: {', '.join(TARGETS)}")
    common.add_argument('--out', help='output directory (or .csv file for metrics)')
    common.add_argument('--input', help='sequence directory for defog/conditions')
    common.add_argument('--frames', type=int, help='number of measurement events')
    common.add_argument('--seed', type=int, help='RNG seed (unsigned 64-bit)')
    common.add_argument('--algorithm', choices=[a.value for a in Algorithm])
    common.add_argument('--pairing', choices=['disjoint', 'disjoint-adjacent', 'sliding'])
    common.add_argument('--normalize', choices=[n.value for n in Normalization])
    common.add_argument('--sweep', type=_int_list, help='comma-separated measurement counts')
    common.add_argument('--seeds', type=_int_list, help='comma-separated seeds')
    common.add_argument('--integration-times', type=_float_list, dest='integration_times',
                        help='comma-separated integration times in seconds (1/30 style allowed)')
    common.add_argument('--require-conditions', action='store_true', default=None,
                        dest='require_conditions')
    common.add_argument('--beta0', type=float)
    common.add_argument('--beta-sigma', type=float, dest='beta_sigma')
    common.add_argument('--d', type=float)
    common.add_argument('--ambient-mean', type=float, dest='ambient_mean')
    common.add_argument('--ambient-sigma', type=float, dest='ambient_sigma')
    common.add_argument('--k-factor', type=float, dest='k_factor')
    common.add_argument('--photon-scale', type=float, dest='photon_scale')
    common.add_argument('--integration-time', type=float, dest='integration_time')
    common.add_argument('--interval', type=float)
    common.add_argument('--shot-noise', dest='shot_noise', action=argparse.BooleanOptionalAction,
                        default=None)
    common.add_argument('--spatial-beta', dest='spatial_beta', action=argparse.BooleanOptionalAction,
                        default=None)
    common.add_argument('--epsilon', type=float)
    common.add_argument('--maxval', type=int, choices=[255, 65535])
    common.add_argument('--quiet', action='store_true', default=None)

    parser = _Parser(prog='defog', description='Time-variant fog simulation and correlation defogging')
    sub = parser.add_subparsers(dest='command')
    sub.add_parser('simulate', parents=[common], help='render a foggy frame sequence')
    sub.add_parser('defog', parents=[common], help='reconstruct from a sequence directory')
    metrics = sub.add_parser('metrics', parents=[common], help='SSIM/PSNR of a candidate image')
    metrics.add_argument('--candidate')
    metrics.add_argument('--reference')
    sub.add_parser('pipeline', parents=[common], help='measurement-count sweep')
    sub.add_parser('conditions', parents=[common], help='check conditions (i) and (ii)')
    sub.add_parser('fluctuation', parents=[common], help='integration-time fluctuation study')
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < --config file < explicit flags"""
    data = RunConfig().to_dict()
    if args.config:
        data.update(RunConfig.from_dict(load_config_file(args.config)).to_dict())

    known = set(data)
    for name, value in vars(args).items():
        if name in ('config', 'command') or value is None:
            continue
        key = _FLAG_KEYS.get(name, name)
        if key in known:
            data[key] = value
    if data.get('pairing') == 'disjoint':
        data['pairing'] = Pairing.DISJOINT_ADJACENT.value
    return RunConfig.from_dict(data).validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand, map errors to exit codes"""
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise ConfigError("a subcommand is required: " + ', '.join(COMMANDS))
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except DefogError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ I/O error: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
