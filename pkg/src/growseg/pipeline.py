"""Config-driven pipeline: gradient -> seeds -> label -> segment -> vectorize.

Each stage reads its prerequisites from the output directory and
writes its artifacts there, so a full run and the same stages run one
at a time produce byte-identical files. The run manifest records the
resolved configuration, per-stage wall times, seed counts, the k
actually used, automaton statistics, and a SHA-256 hash per artifact.
Wall times live only in the manifest; every other artifact is a pure
function of config plus inputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import clustering, growcut, morphology, seeding, vectorize
from .errors import ConfigError, DependencyError
from .raster import (
    MultiBandRaster,
    load_label_raster,
    load_raster,
    normalize_bands,
    parse_header,
    save_label_raster,
    save_mask_pgm,
    save_raster,
)
from .rng import Prng

STAGES = ("gradient", "seeds", "label", "segment", "vectorize")

ARTIFACTS = {
    "gradient": ("gradient.header", "gradient.data"),
    "seeds": ("seed_mask.pgm", "seeds.json", "seeds_info.json"),
    "label": ("seeds_labeled.json", "label_info.json"),
    "segment": ("labels.pgm", "segment_report.json"),
    "vectorize": ("polygons.json", "overlay.ppm"),
}

_CONFIG_FIELDS = {
    "input_header",
    "input_data",
    "output_dir",
    "asf_radius",
    "scales",
    "quant_levels",
    "min_seed_size",
    "red_band",
    "nir_band",
    "k",
    "restarts",
    "prng_seed",
    "neighborhood",
    "max_iters",
    "rgb_bands",
    "overlay_color",
}


@dataclass
class PipelineConfig:
    input_header: str
    input_data: str
    output_dir: str
    red_band: int
    nir_band: int
    asf_radius: int = 1
    scales: int = 2
    quant_levels: int = 64
    min_seed_size: int = 4
    k: int = 20
    restarts: int = 10
    prng_seed: int = 0
    neighborhood: str = "moore8"
    max_iters: int | None = None  # None: width + height, resolved per image
    rgb_bands: list[int] | None = None
    overlay_color: list[int] = dataclasses.field(default_factory=lambda: [255, 255, 0])

    def __post_init__(self):
        for name, minimum in (
            ("asf_radius", 1),
            ("scales", 1),
            ("quant_levels", 2),
            ("min_seed_size", 1),
            ("k", 1),
            ("restarts", 1),
        ):
            v = getattr(self, name)
            if not isinstance(v, int) or v < minimum:
                raise ConfigError(f"{name} must be an integer >= {minimum}, got {v!r}")
        for name in ("red_band", "nir_band"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ConfigError(f"{name} must be a non-negative band index, got {v!r}")
        if self.red_band == self.nir_band:
            raise ConfigError("red_band and nir_band must differ")
        if not isinstance(self.prng_seed, int) or self.prng_seed < 0:
            raise ConfigError(f"prng_seed must be a non-negative integer, got {self.prng_seed!r}")
        if self.neighborhood not in ("moore8", "vn4", "vonneumann4"):
            raise ConfigError(f"neighborhood must be moore8 or vn4, got {self.neighborhood!r}")
        if self.max_iters is not None and (not isinstance(self.max_iters, int) or self.max_iters < 1):
            raise ConfigError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if self.rgb_bands is not None:
            if len(self.rgb_bands) != 3 or any(not isinstance(b, int) or b < 0 for b in self.rgb_bands):
                raise ConfigError("rgb_bands must list 3 non-negative band indices")
        if len(self.overlay_color) != 3 or any(
            not isinstance(c, int) or not 0 <= c <= 255 for c in self.overlay_color
        ):
            raise ConfigError("overlay_color must list 3 values in 0..255")

    @classmethod
    def from_dict(cls, payload: dict, overrides: dict | None = None) -> "PipelineConfig":
        merged = dict(payload)
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
        unknown = merged.keys() - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"input_header", "input_data", "output_dir", "red_band", "nir_band"} - merged.keys()
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    @classmethod
    def from_json(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid config JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(payload, overrides)

    def resolved(self, width: int, height: int, bands: int) -> dict:
        """Config with every defaulted field made concrete for this image."""
        out = dataclasses.asdict(self)
        out["neighborhood"] = "vn4" if self.neighborhood == "vonneumann4" else self.neighborhood
        if out["max_iters"] is None:
            out["max_iters"] = width + height
        if out["rgb_bands"] is None:
            out["rgb_bands"] = [min(i, bands - 1) for i in (0, 1, 2)]
        return out


@dataclass
class RunManifest:
    config: dict
    stage_seconds: dict
    stage_info: dict
    output_hashes: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "stage_seconds": self.stage_seconds,
            "stages": self.stage_info,
            "outputs": self.output_hashes,
        }


def _write_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _out(config: PipelineConfig, name: str) -> str:
    return os.path.join(config.output_dir, name)


def _require(config: PipelineConfig, stage: str, *names: str) -> None:
    for name in names:
        if not os.path.exists(_out(config, name)):
            raise DependencyError(f"{stage}: missing prerequisite artifact {name!r}")


def _load_input(config: PipelineConfig) -> MultiBandRaster:
    for path in (config.input_header, config.input_data):
        if not os.path.exists(path):
            raise DependencyError(f"input file not found: {path}")
    r = load_raster(config.input_header, config.input_data)
    if config.red_band >= r.bands or config.nir_band >= r.bands:
        raise ConfigError(
            f"red_band/nir_band out of range for a {r.bands}-band image"
        )
    return r


def _stage_gradient(config: PipelineConfig) -> dict:
    r = _load_input(config)
    normalized = normalize_bands(r)
    filtered = np.empty_like(normalized.data)
    for b in range(r.bands):
        filtered[b] = morphology.asf(normalized.band(b), config.asf_radius).data
    filtered_raster = MultiBandRaster(r.width, r.height, r.bands, filtered)
    grad = morphology.multiscale_gradient(filtered_raster, config.scales)
    grad_raster = MultiBandRaster(r.width, r.height, 1, grad.data[None, :, :])
    save_raster(grad_raster, _out(config, "gradient.header"), _out(config, "gradient.data"))
    return {"gradient_max": float(grad.data.max()), "gradient_min": float(grad.data.min())}


def _stage_seeds(config: PipelineConfig) -> dict:
    _require(config, "seeds", "gradient.header", "gradient.data")
    grad_raster = load_raster(_out(config, "gradient.header"), _out(config, "gradient.data"))
    grad = grad_raster.band(0)
    mask = morphology.regional_minima(grad, config.quant_levels)
    save_mask_pgm(mask.data, _out(config, "seed_mask.pgm"))
    components = seeding.connected_components(mask)
    pruned = seeding.prune_small(components, config.min_seed_size)
    r = _load_input(config)
    described = seeding.compute_descriptors(r, pruned, config.red_band, config.nir_band)
    seeding.save_seed_set(described, _out(config, "seeds.json"))
    info = {
        "seed_pixels": int(mask.data.sum()),
        "components": len(components.regions),
        "seeds_after_prune": len(pruned.regions),
    }
    _write_json(info, _out(config, "seeds_info.json"))
    return info


def _stage_label(config: PipelineConfig) -> dict:
    _require(config, "label", "seeds.json")
    seeds = seeding.load_seed_set(_out(config, "seeds.json"))
    r = _load_input(config)
    scaled = seeding.scale_descriptors(seeds, r)
    result = clustering.best_of_restarts(
        scaled, config.k, config.restarts, Prng(config.prng_seed)
    )
    labeled = clustering.apply_labels(seeds, result)
    seeding.save_seed_set(labeled, _out(config, "seeds_labeled.json"))
    info = {
        "k_requested": config.k,
        "k_used": result.k,
        "restarts": config.restarts,
        "separation": result.separation,
        "inertia": result.inertia,
    }
    _write_json(info, _out(config, "label_info.json"))
    return info


def _stage_segment(config: PipelineConfig) -> dict:
    _require(config, "segment", "seeds_labeled.json")
    seeds = seeding.load_seed_set(_out(config, "seeds_labeled.json"))
    if any(reg.cluster_label is None for reg in seeds.regions):
        raise DependencyError("segment: seeds_labeled.json has unlabeled regions")
    r = _load_input(config)
    normalized = normalize_bands(r)
    nd = seeding.ndvi(r, config.red_band, config.nir_band)
    features = growcut.build_features(normalized, nd)
    resolved = config.resolved(r.width, r.height, r.bands)
    params = growcut.GrowCutParams(
        max_iterations=resolved["max_iters"], neighborhood=resolved["neighborhood"]
    )
    state = growcut.init_automaton(features, seeds, params)
    result = growcut.run(state, params, engine="active")
    save_label_raster(result.labels, _out(config, "labels.pgm"))
    info = {
        "iterations": result.iterations,
        "converged": result.converged,
        "changed_per_generation": result.changed_history,
        "unlabeled_pixels": result.unlabeled_pixels,
        "visited_cells": result.visited_cells,
        "engine": "active",
        "c_bar": state.c_bar,
    }
    _write_json(info, _out(config, "segment_report.json"))
    return info


def _stage_vectorize(config: PipelineConfig) -> dict:
    _require(config, "vectorize", "labels.pgm")
    labels = load_label_raster(_out(config, "labels.pgm"))
    polygons = vectorize.trace_contours(labels)
    vectorize.export_polygons(polygons, _out(config, "polygons.json"))
    r = _load_input(config)
    resolved = config.resolved(r.width, r.height, r.bands)
    vectorize.render_overlay(
        r,
        labels,
        tuple(resolved["rgb_bands"]),
        _out(config, "overlay.ppm"),
        color=tuple(config.overlay_color),
    )
    return {
        "polygons": len(polygons.polygons),
        "distinct_labels": len({p.segment_label for p in polygons.polygons}),
    }


_STAGE_FUNCS = {
    "gradient": _stage_gradient,
    "seeds": _stage_seeds,
    "label": _stage_label,
    "segment": _stage_segment,
    "vectorize": _stage_vectorize,
}


def run_stage(stage_name: str, config: PipelineConfig) -> dict:
    """Run one stage against artifacts already present in the output dir."""
    if stage_name not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage_name!r}; stages are {', '.join(STAGES)}")
    os.makedirs(config.output_dir, exist_ok=True)
    return _STAGE_FUNCS[stage_name](config)


def run_pipeline(config: PipelineConfig) -> RunManifest:
    """Run all stages in order and write the reproducibility manifest."""
    os.makedirs(config.output_dir, exist_ok=True)
    header = parse_header(config.input_header) if os.path.exists(config.input_header) else None
    stage_seconds: dict[str, float] = {}
    stage_info: dict[str, dict] = {}
    for stage in STAGES:
        start = time.perf_counter()
        stage_info[stage] = _STAGE_FUNCS[stage](config)
        stage_seconds[stage] = time.perf_counter() - start
    if header is None:
        header = parse_header(config.input_header)
    resolved = config.resolved(header.width, header.height, header.bands)
    hashes = {
        name: _sha256(_out(config, name))
        for stage in STAGES
        for name in ARTIFACTS[stage]
    }
    manifest = RunManifest(
        config=resolved,
        stage_seconds=stage_seconds,
        stage_info=stage_info,
        output_hashes=hashes,
    )
    _write_json(manifest.to_dict(), _out(config, "manifest.json"))
    return manifest
