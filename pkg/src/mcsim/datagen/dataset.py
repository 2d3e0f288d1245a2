"""Dataset generators, on-disk container, and manifest bookkeeping.

A dataset lives in a directory holding ``records.bin`` (length-prefixed
binary sample records) and ``manifest.json`` (counts, per-channel min/max
normalization statistics, seed, generator version, checksum).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from ..cardio.constants import CircConstants, default_constants, realproxy_constants
from ..cardio.model import BeatSeries
from ..errors import ContractViolation
from .features import (
    CHANNEL_NAMES,
    COL_HR,
    COL_MAP,
    FeatureWindow,
    WINDOW_STEPS,
    WindowRejected,
    bin_mean,
    derive_features,
)
from .samples import HORIZON, Sample, SampleRejected, augment
from .synth import PerturbConfig, build_cycle_libraries, synthesize_beatseries
from .trends import TrendLabel, label_trend

log = logging.getLogger(__name__)

GENERATOR_VERSION = 1
MAP_RANGE = (20.0, 200.0)   # fixed normalization range for MAP and targets
HR_RANGE = (40.0, 300.0)    # outlier filter bounds


@dataclass
class GeneratorConfig:
    """Grid ranges, trajectory statistics, and augmentation strengths."""

    hr_values: tuple = (55.0, 75.0, 95.0, 115.0, 135.0)
    ees_values: tuple = (0.8, 1.5, 2.5, 4.0)
    tau_values: tuple = (0.05, 0.075, 0.1)
    n_per_cell: int = 8
    domain: int = 0
    use_realproxy_constants: bool = False
    constants_path: str | None = None
    # piecewise-constant level trajectories; tuned so the generated trend mix
    # sits near the 65/20/15 stat/inc/dec split the benchmark expects
    level_min: int = 1
    level_max: int = 7
    ncp_probs: tuple = (0.25, 0.3, 0.45)      # P(1, 2, 3 change-points / 30 min)
    delta_probs: tuple = (0.1, 0.15, 0.25, 0.25, 0.25)  # P(|level jump| = 1..5)
    p_up: float = 0.6
    # augmentation draws
    shift_range: tuple = (-10.0, 10.0)
    scale_range: tuple = (0.9, 1.1)
    noise_sigma: float = 1.0
    # waveform-stage perturbations (real-proxy only)
    perturb: PerturbConfig | None = None
    duration_s: int = 1800
    n_jobs: int = 1

    def constants(self) -> CircConstants:
        if self.constants_path:
            from ..cardio.constants import load_constants

            return load_constants(self.constants_path)
        return realproxy_constants() if self.use_realproxy_constants else default_constants()


def sim_default_config() -> GeneratorConfig:
    return GeneratorConfig(perturb=PerturbConfig(obs_noise=0.3))


def realproxy_default_config() -> GeneratorConfig:
    """Clinical-cohort stand-in: narrower parameter distribution, shifted
    circulation constants, drift/modulation/respiration/noise layered on."""
    return GeneratorConfig(
        hr_values=(62.0, 76.0, 90.0, 104.0),
        ees_values=(0.7, 1.1, 1.8),
        tau_values=(0.055, 0.08),
        n_per_cell=14,
        domain=1,
        use_realproxy_constants=True,
        level_min=2,
        level_max=8,
        ncp_probs=(0.5, 0.3, 0.2),
        delta_probs=(0.3, 0.25, 0.2, 0.15, 0.1),
        p_up=0.55,
        perturb=PerturbConfig(ou_std=3.5, hr_mod_amp=0.1, resp_amp=3.0, obs_noise=1.5),
    )


@dataclass
class DatasetManifest:
    """Counts, normalization statistics, and provenance of one container."""

    version: int
    seed: int
    generator: str
    n_samples: int
    counts_by_domain: dict
    counts_by_trend: dict
    channel_stats: dict      # name -> [min, max]; includes the target "y"
    records_sha256: str
    rejected: dict = field(default_factory=dict)

    def validate(self):
        if sum(self.counts_by_domain.values()) != self.n_samples:
            raise ContractViolation("domain counts do not sum to n_samples")
        if sum(self.counts_by_trend.values()) != self.n_samples:
            raise ContractViolation("trend counts do not sum to n_samples")
        for name, (lo, hi) in self.channel_stats.items():
            if not lo < hi:
                raise ContractViolation(f"channel {name}: min must be < max")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        return cls(**json.loads(text))


def compute_channel_stats(samples) -> dict:
    """Per-channel min/max over the context windows; MAP and the target
    share the fixed (20, 200) range so the decoder's sigmoid can cover it."""
    stats = {}
    for i, name in enumerate(CHANNEL_NAMES):
        if name == "map":
            stats[name] = list(MAP_RANGE)
            continue
        if samples:
            col = np.concatenate([s.x.values[:, i] for s in samples])
            lo, hi = float(col.min()), float(col.max())
            if hi - lo < 1e-9:
                hi = lo + 1.0
        else:
            lo, hi = 0.0, 1.0
        stats[name] = [lo, hi]
    stats["y"] = list(MAP_RANGE)
    return stats


def _gen_level_track(rng: np.random.Generator, cfg: GeneratorConfig) -> np.ndarray:
    """Piecewise-constant per-second level trajectory with 1-3 change-points."""
    track = np.empty(cfg.duration_s, dtype=int)
    level = int(rng.integers(cfg.level_min, cfg.level_max + 1))
    n_cp = int(rng.choice([1, 2, 3], p=cfg.ncp_probs))
    times = np.sort(rng.uniform(30.0, cfg.duration_s - 30.0, n_cp)).astype(int)
    prev = 0
    for t_cp in times:
        track[prev:t_cp] = level
        mag = int(rng.choice([1, 2, 3, 4, 5], p=cfg.delta_probs))
        sign = 1 if rng.random() < cfg.p_up else -1
        level = int(np.clip(level + sign * mag, 1, 9))
        prev = t_cp
    track[prev:] = level
    return track


def _one_sample(cycles, circ, cfg: GeneratorConfig, entropy) -> tuple:
    """Generate, featurize, augment, and filter a single window.

    Returns (Sample | None, rejection reason | None).
    """
    rng = np.random.default_rng(entropy)
    track = _gen_level_track(rng, cfg)
    series = synthesize_beatseries(cycles, track, circ, rng, cfg.perturb)
    half = cfg.duration_s // 2
    fs = series.fs
    context = BeatSeries(aop=series.aop[: half * fs], lvp=series.lvp[: half * fs],
                         qp=series.qp[: half * fs])
    try:
        x = derive_features(context, track[:half])
    except WindowRejected:
        return None, "window"
    y = bin_mean(series.aop[half * fs:], fs)
    pl = np.array([np.bincount(track[half + 10 * i: half + 10 * (i + 1)],
                               minlength=10).argmax() for i in range(HORIZON)])
    base = Sample(x=x, pl=pl, y=y, domain=cfg.domain, trend=label_trend(y))
    shift = rng.uniform(*cfg.shift_range)
    scale = rng.uniform(*cfg.scale_range)
    try:
        sample = augment(base, shift, scale, rng_seed=list(entropy) + [1],
                         noise_sigma=cfg.noise_sigma)
    except SampleRejected:
        return None, "augment"
    map_vals = np.concatenate([sample.x.values[:, COL_MAP], sample.y])
    hr_vals = sample.x.values[:, COL_HR]
    if (np.any(map_vals <= MAP_RANGE[0]) or np.any(map_vals >= MAP_RANGE[1])
            or np.any(hr_vals <= HR_RANGE[0]) or np.any(hr_vals >= HR_RANGE[1])):
        return None, "outlier"
    return sample, None


def _generate(cfg: GeneratorConfig, seed: int, generator_name: str, out_dir=None):
    cells = [(hr, ees, tau)
             for hr in cfg.hr_values for ees in cfg.ees_values for tau in cfg.tau_values]
    circ = cfg.constants()
    rejected = {"window": 0, "augment": 0, "outlier": 0, "diverged_cells": 0}

    libraries, diverged = build_cycle_libraries(cells, circ=circ)
    rejected["diverged_cells"] = len(diverged)
    for cell in diverged:
        log.warning("cell %s diverged; skipped", cell)

    jobs = []
    for ci, cell in enumerate(cells):
        if cell not in libraries:
            continue
        for i in range(cfg.n_per_cell):
            jobs.append((libraries[cell], [seed, ci, i]))

    runner = Parallel(n_jobs=cfg.n_jobs) if cfg.n_jobs != 1 else None
    if runner is not None:
        results = runner(delayed(_one_sample)(cycles, circ, cfg, ent) for cycles, ent in jobs)
    else:
        results = [_one_sample(cycles, circ, cfg, ent) for cycles, ent in jobs]

    samples = []
    for sample, reason in results:
        if sample is None:
            rejected[reason] += 1
        else:
            samples.append(sample)

    manifest = DatasetManifest(
        version=GENERATOR_VERSION,
        seed=seed,
        generator=generator_name,
        n_samples=len(samples),
        counts_by_domain=_count_by(samples, lambda s: str(s.domain)),
        counts_by_trend=_count_by(samples, lambda s: s.trend.value),
        channel_stats=compute_channel_stats(samples),
        records_sha256=hashlib.sha256(_encode_records(samples)).hexdigest(),
        rejected=rejected,
    )
    manifest.validate()
    if out_dir is not None:
        write_dataset(out_dir, samples, manifest)
    return samples, manifest


def _count_by(samples, key) -> dict:
    counts = {}
    for s in samples:
        k = key(s)
        counts[k] = counts.get(k, 0) + 1
    return counts


def make_sim_dataset(config: GeneratorConfig | None = None, seed: int = 0, out_dir=None):
    """Grid-sampled simulated domain (domain label 0)."""
    cfg = config or sim_default_config()
    return _generate(cfg, seed, "sim", out_dir)


def make_realproxy_dataset(config: GeneratorConfig | None = None, seed: int = 0, out_dir=None):
    """Documented stand-in for the clinical cohort (domain label 1)."""
    cfg = config or realproxy_default_config()
    return _generate(cfg, seed, "realproxy", out_dir)


# -- binary container -------------------------------------------------------

_TREND_CODE = {TrendLabel.INC: 0, TrendLabel.DEC: 1, TrendLabel.STAT: 2}
_CODE_TREND = {v: k for k, v in _TREND_CODE.items()}


def _encode_record(s: Sample) -> bytes:
    payload = (
        s.x.values.astype("<f8").tobytes()
        + s.pl.astype(np.uint8).tobytes()
        + s.y.astype("<f8").tobytes()
        + bytes([s.domain, _TREND_CODE[s.trend]])
    )
    return struct.pack("<I", len(payload)) + payload


def _encode_records(samples) -> bytes:
    return b"".join(_encode_record(s) for s in samples)


def _decode_record(payload: bytes) -> Sample:
    nx = WINDOW_STEPS * len(CHANNEL_NAMES) * 8
    x = np.frombuffer(payload[:nx], dtype="<f8").reshape(WINDOW_STEPS, len(CHANNEL_NAMES))
    off = nx
    pl = np.frombuffer(payload[off:off + HORIZON], dtype=np.uint8).astype(np.int64)
    off += HORIZON
    y = np.frombuffer(payload[off:off + HORIZON * 8], dtype="<f8")
    off += HORIZON * 8
    domain, trend_code = payload[off], payload[off + 1]
    return Sample(x=FeatureWindow(x.copy()), pl=pl, y=y.copy(),
                  domain=int(domain), trend=_CODE_TREND[trend_code])


def write_dataset(dirpath, samples, manifest: DatasetManifest):
    os.makedirs(dirpath, exist_ok=True)
    blob = _encode_records(samples)
    digest = hashlib.sha256(blob).hexdigest()
    if digest != manifest.records_sha256:
        manifest = replace(manifest, records_sha256=digest)
    with open(os.path.join(dirpath, "records.bin"), "wb") as fh:
        fh.write(blob)
    with open(os.path.join(dirpath, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())


def load_dataset(dirpath):
    """Read a container back; every sample re-validates its invariants and
    the manifest counts/checksum are enforced."""
    with open(os.path.join(dirpath, "manifest.json"), "r", encoding="utf-8") as fh:
        manifest = DatasetManifest.from_json(fh.read())
    with open(os.path.join(dirpath, "records.bin"), "rb") as fh:
        blob = fh.read()
    if hashlib.sha256(blob).hexdigest() != manifest.records_sha256:
        raise ContractViolation("records.bin does not match the manifest checksum")
    samples = []
    off = 0
    while off < len(blob):
        (length,) = struct.unpack_from("<I", blob, off)
        off += 4
        samples.append(_decode_record(blob[off:off + length]))
        off += length
    if len(samples) != manifest.n_samples:
        raise ContractViolation("manifest count does not match the records file")
    manifest.validate()
    for s in samples:
        s.validate()
    return samples, manifest


def export_debug_csv(samples, path):
    """Human-readable dump: one row per timestep, context rows then target rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sample_id,step,role," + ",".join(CHANNEL_NAMES) + "\n")
        for sid, s in enumerate(samples):
            for step in range(WINDOW_STEPS):
                vals = ",".join(f"{v:.6f}" for v in s.x.values[step])
                fh.write(f"{sid},{step},x,{vals}\n")
            for step in range(HORIZON):
                fh.write(f"{sid},{step},y,{s.y[step]:.6f},{s.pl[step]},,,,,\n")
