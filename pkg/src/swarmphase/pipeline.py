"""End-to-end pipeline: simulate or load, correspond, observe, segment, embed.

All artifacts are deterministic for a fixed configuration and seed: CSVs use
17-significant-digit floats, the distance image is a byte-exact PGM, and the
summary contains no timestamps.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import io as io_
from .manifold import configuration_matrix, isomap
from .mapping import canonicalize_order, velocities
from .observables import compute_observables, distance_matrix
from .segment import label_manifolds, per_segment_isomap, segment_series
from .sim import make_scenario, simulate

OUTPUT_DIR_ENV = "SWARMPHASE_OUT"


class ConfigError(ValueError):
    """Invalid pipeline configuration; the message names the offending key."""


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


@dataclass
class PipelineConfig:
    scenario: str | None = None
    input_path: str | None = None
    seed: int = 0
    xi1: float = 1.0 / 3.0
    xi2: float = 1.0 / 3.0
    epsilon_mode: str = "all_pairs"
    k: int = 7
    d_max: int = 10
    threshold: float = 0.1
    min_len: int = 10
    merge_tol: float = 0.1
    out_dir: str | None = None
    n_agents: int | None = None
    n_steps: int | None = None
    half_width: float | None = None
    half_height: float | None = None
    dt: float | None = None
    canonicalize: bool = True
    prefer_unwrapped: bool = True
    periodic_matching: bool = False
    literal_sigmoid: bool = False
    dump_correspondence: bool = False

    def validate(self) -> None:
        if (self.scenario is None) == (self.input_path is None):
            raise ConfigError("exactly one of 'scenario' and 'input' must be set")
        if self.xi1 < 0:
            raise ConfigError("xi1: must be non-negative")
        if self.xi2 < 0:
            raise ConfigError("xi2: must be non-negative")
        if self.xi1 + self.xi2 > 1.0:
            raise ConfigError("xi1, xi2: weights must sum to at most 1")
        if self.epsilon_mode not in ("all_pairs", "nearest_neighbor"):
            raise ConfigError("epsilon_mode: must be 'all_pairs' or 'nearest_neighbor'")
        if self.k < 1:
            raise ConfigError("k: must be at least 1")
        if self.d_max < 1:
            raise ConfigError("dmax: must be at least 1")
        if not (0.0 < self.threshold < 1.0):
            raise ConfigError("threshold: must lie in (0, 1)")
        if self.min_len < 1:
            raise ConfigError("min_len: must be at least 1")
        if self.merge_tol < 0:
            raise ConfigError("merge_tol: must be non-negative")
        for key in ("n_agents", "n_steps"):
            value = getattr(self, key)
            if value is not None and value < 1:
                raise ConfigError(f"{key}: must be at least 1")
        for key in ("half_width", "half_height", "dt"):
            value = getattr(self, key)
            if value is not None and value <= 0:
                raise ConfigError(f"{key}: must be positive")

    def resolved_out_dir(self) -> Path:
        if self.out_dir is not None:
            return Path(self.out_dir)
        return Path(os.environ.get(OUTPUT_DIR_ENV, "swarmphase-out"))


def _parse_bool(key: str, value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


# config-file key -> (attribute, parser)
_CONFIG_KEYS = {
    "scenario": ("scenario", str),
    "input": ("input_path", str),
    "seed": ("seed", int),
    "xi1": ("xi1", float),
    "xi2": ("xi2", float),
    "epsilon_mode": ("epsilon_mode", str),
    "k": ("k", int),
    "dmax": ("d_max", int),
    "threshold": ("threshold", float),
    "min_len": ("min_len", int),
    "merge_tol": ("merge_tol", float),
    "out": ("out_dir", str),
    "n_agents": ("n_agents", int),
    "n_steps": ("n_steps", int),
    "half_width": ("half_width", float),
    "half_height": ("half_height", float),
    "dt": ("dt", float),
    "canonicalize": ("canonicalize", _parse_bool),
    "prefer_unwrapped": ("prefer_unwrapped", _parse_bool),
    "periodic_matching": ("periodic_matching", _parse_bool),
    "literal_sigmoid": ("literal_sigmoid", _parse_bool),
    "dump_correspondence": ("dump_correspondence", _parse_bool),
}


def config_from_sources(
    file_values: dict[str, str] | None = None, overrides: dict | None = None
) -> PipelineConfig:
    """Build a config from file values and explicit overrides.

    Precedence: dataclass defaults < config file < overrides (CLI flags).
    Unknown config keys and unparsable values are rejected by key name.
    """
    config = PipelineConfig()
    for key, raw in (file_values or {}).items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        attr, parser = _CONFIG_KEYS[key]
        try:
            value = parser(key, raw) if parser is _parse_bool else parser(raw)
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(f"{key}: cannot parse value {raw!r}") from None
        setattr(config, attr, value)
    known = {f.name for f in fields(PipelineConfig)}
    for attr, value in (overrides or {}).items():
        if attr not in known:
            raise ConfigError(f"unknown config key {attr!r}")
        if value is not None:
            setattr(config, attr, value)
    return config


@dataclass
class PipelineResult:
    dataset: object
    maps: list
    series: object
    delta: np.ndarray
    segmentation: object
    segment_reports: list
    full_report: object
    artifacts: dict[str, Path]
    summary: str


def _scenario_overrides(config: PipelineConfig) -> dict:
    overrides = {"seed": config.seed}
    for key in ("n_agents", "n_steps", "half_width", "half_height", "dt"):
        value = getattr(config, key)
        if value is not None:
            overrides[key] = value
    if config.scenario == "split-rejoin" and config.literal_sigmoid:
        overrides["literal_sigmoid"] = True
    return overrides


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"{name}: {exc}") from exc


def build_dataset(config: PipelineConfig):
    if config.scenario is not None:
        params = make_scenario(config.scenario, **_scenario_overrides(config))
        return simulate(params)
    return io_.load_trajectory_csv(config.input_path)


def _summary_lines(config, dataset, series, segmentation, segment_reports, full_report):
    lines = []
    if config.scenario is not None:
        lines.append(f"scenario: {config.scenario}")
        lines.append(f"seed: {config.seed}")
    else:
        lines.append(f"input: {config.input_path}")
    lines.append(f"frames: {dataset.n_frames}")
    lines.append(f"agents: {dataset.n_agents}")
    lines.append(f"xi1: {io_.format_float(series.weight_speed)}")
    lines.append(f"xi2: {io_.format_float(series.weight_polarization)}")
    lines.append(f"epsilon_mode: {config.epsilon_mode}")
    lines.append(f"epsilon: {io_.format_float(series.epsilon)}")
    lines.append(f"isomap_k_requested: {config.k}")
    lines.append(f"segments: {len(segmentation.segments)}")
    for seg, report in zip(segmentation.segments, segment_reports):
        dstar = "skipped" if report is None else str(report.dimension)
        k_used = "-" if report is None else str(report.k)
        lines.append(
            f"  steps {seg.start}-{seg.end}: mean_X={io_.format_float(seg.mean_value)} "
            f"label={seg.label} dstar={dstar} k={k_used}"
        )
    lines.append(f"full_dataset: dstar={full_report.dimension} k={full_report.k}")
    lines.append(f"manifold_labels: {segmentation.n_labels}")
    return lines


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute every stage and write the artifact set to the output directory."""
    config.validate()
    out_dir = config.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = _stage("sim" if config.scenario else "load", build_dataset, config)
    if dataset.n_frames < 2:
        raise PipelineError("load: need at least 2 frames")

    maps = _stage(
        "mapping",
        velocities,
        dataset,
        prefer_unwrapped=config.prefer_unwrapped,
        periodic_matching=config.periodic_matching,
    )
    series = _stage(
        "observables",
        compute_observables,
        dataset,
        maps,
        weight_speed=config.xi1,
        weight_polarization=config.xi2,
        epsilon_mode=config.epsilon_mode,
        prefer_unwrapped=config.prefer_unwrapped,
    )
    delta = _stage("observables", distance_matrix, series.coarse)

    segmentation = _stage("segment", segment_series, series.coarse, config.min_len)
    segmentation = _stage("segment", label_manifolds, segmentation, config.merge_tol)

    track = dataset.analysis_track(config.prefer_unwrapped)
    if config.canonicalize:
        track = _stage("mapping", canonicalize_order, track, maps)
    points = configuration_matrix(track[:-1])
    segment_reports, full_report = _stage(
        "manifold",
        per_segment_isomap,
        points,
        segmentation,
        k=config.k,
        d_max=config.d_max,
        threshold=config.threshold,
    )

    artifacts: dict[str, Path] = {}

    def _write(name: str, filename: str, writer, *args) -> None:
        path = out_dir / filename
        _stage("io", writer, path, *args)
        artifacts[name] = path

    _write("trajectory", "trajectory.csv", io_.save_trajectory_csv, dataset.wrapped)
    if dataset.unwrapped is not None:
        _write(
            "trajectory_unwrapped",
            "trajectory_unwrapped.csv",
            io_.save_trajectory_csv,
            dataset.unwrapped,
        )
    _write("observables", "observables.csv", io_.save_observables_csv, series)
    _write("distance_image", "distance.pgm", io_.save_distance_pgm, delta)
    dims = [None if r is None else r.dimension for r in segment_reports]
    _write("segments", "segments.csv", io_.save_segments_csv, segmentation, dims)
    _write("residual_full", "residual_full.csv", io_.save_residual_csv, full_report.residual_variances)
    for idx, report in enumerate(segment_reports, start=1):
        if report is None:
            continue
        _write(
            f"residual_segment_{idx:02d}",
            f"residual_segment_{idx:02d}.csv",
            io_.save_residual_csv,
            report.residual_variances,
        )
    if config.dump_correspondence:
        _write("correspondence", "correspondence.csv", io_.save_correspondence_csv, maps)

    summary = "\n".join(
        _summary_lines(config, dataset, series, segmentation, segment_reports, full_report)
    ) + "\n"
    summary_path = out_dir / "summary.txt"
    summary_path.write_text(summary)
    artifacts["summary"] = summary_path

    return PipelineResult(
        dataset=dataset,
        maps=maps,
        series=series,
        delta=delta,
        segmentation=segmentation,
        segment_reports=segment_reports,
        full_report=full_report,
        artifacts=artifacts,
        summary=summary,
    )


def run_simulate(config: PipelineConfig) -> dict[str, Path]:
    """Simulate a scenario and write only the trajectory artifacts."""
    config.validate()
    if config.scenario is None:
        raise ConfigError("scenario: the simulate command needs a scenario name")
    out_dir = config.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = _stage("sim", build_dataset, config)
    artifacts = {}
    path = out_dir / "trajectory.csv"
    _stage("io", io_.save_trajectory_csv, path, dataset.wrapped)
    artifacts["trajectory"] = path
    path = out_dir / "trajectory_unwrapped.csv"
    _stage("io", io_.save_trajectory_csv, path, dataset.unwrapped)
    artifacts["trajectory_unwrapped"] = path
    return artifacts


def run_isomap(config: PipelineConfig) -> dict[str, Path]:
    """Isomap on a whole trajectory file; writes residual and embedding CSVs."""
    config.validate()
    if config.input_path is None:
        raise ConfigError("input: the isomap command needs a trajectory file")
    out_dir = config.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = _stage("load", io_.load_trajectory_csv, config.input_path)
    if dataset.n_frames < 2:
        raise PipelineError("load: need at least 2 frames")
    track = dataset.analysis_track(config.prefer_unwrapped)
    if config.canonicalize:
        maps = _stage("mapping", velocities, dataset, prefer_unwrapped=config.prefer_unwrapped)
        track = _stage("mapping", canonicalize_order, track, maps)
    points = configuration_matrix(track)
    report = _stage("manifold", isomap, points, config.k, config.d_max, config.threshold)
    artifacts = {}
    path = out_dir / "residual_full.csv"
    _stage("io", io_.save_residual_csv, path, report.residual_variances)
    artifacts["residual_full"] = path
    path = out_dir / "embedding_full.csv"
    _stage("io", io_.save_embedding_csv, path, report.embeddings[report.dimension - 1])
    artifacts["embedding_full"] = path
    summary = f"dstar: {report.dimension}\nk: {report.k}\n"
    path = out_dir / "isomap_summary.txt"
    path.write_text(summary)
    artifacts["summary"] = path
    return artifacts
