"""Preprocess, fuse, train and evaluate over subject-independent folds."""

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cache as clip_cache
from .errors import DataError
from .fusion import Strategy, clip_seed, fuse, token_modality
from .manifest import input_hash, load_clip, read_manifest
from .sampling import AlignedClip, align
from .training import evaluate, make_folds, pool_reports, train
from .weights import save_params

log = logging.getLogger(__name__)

# bump when the front end changes numerically so stale caches are rebuilt
FRONTEND_REVISION = 2

STRATEGY_ORDER = ("cfas", "sfas", "ffls", "fslf", "ofos", "rfas")


@dataclass(frozen=True)
class SamplingPlan:
    count: int
    step: int
    height: int
    width: int
    spec: object
    pad_last: bool = False

    def key(self):
        """Short digest naming the cache directory for this plan."""
        text = json.dumps(
            {"count": self.count, "step": self.step, "size": [self.height, self.width],
             "spec": repr(self.spec), "pad_last": self.pad_last, "version": clip_cache.VERSION,
             "frontend": FRONTEND_REVISION},
            sort_keys=True,
        )
        digest = hashlib.sha256(text.encode()).hexdigest()[:12]
        return f"T{self.count}_s{self.step}_{self.height}x{self.width}_{digest}"


def sampling_plan(run_cfg, strategy):
    """Frame count, step and image size a strategy needs from the raw clip."""
    strategy = Strategy.parse(strategy)
    model_cfg = run_cfg.model_config()
    count = strategy.input_frames(model_cfg.frames)
    step = run_cfg.step_full if strategy.full_rate else run_cfg.step_half
    height, width = strategy.frame_size(model_cfg.height, model_cfg.width)
    return SamplingPlan(count, step, height, width, run_cfg.spec_config(), run_cfg.pad_last)


@dataclass
class PreprocessResult:
    written: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failed: dict = field(default_factory=dict)
    cache_dir: Path | None = None


def _index_path(directory):
    return directory / "index.json"


def _read_index(directory):
    path = _index_path(directory)
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text())
    except ValueError:
        return {}


def preprocess(manifest, run_cfg, strategies=None, workers=1):
    """Cache one aligned clip per manifest row and sampling plan.

    Entries whose input hash is unchanged are skipped, so a second run
    writes nothing. Per-clip failures are collected, not raised.
    """
    strategies = strategies or [run_cfg.strategy]
    plans = {}
    for s in strategies:
        plan = sampling_plan(run_cfg, s)
        plans[plan.key()] = plan
    result = PreprocessResult(cache_dir=run_cfg.resolved_cache_dir())
    if not len(manifest):
        log.warning("manifest is empty; nothing to preprocess")
        return result

    for key, plan in plans.items():
        directory = result.cache_dir / key
        directory.mkdir(parents=True, exist_ok=True)
        index = _read_index(directory)

        def work(row, plan=plan, directory=directory, index=index):
            target = directory / f"{row.clip_id}.mmdc"
            try:
                digest = input_hash(row)
                if index.get(row.clip_id) == digest and target.exists():
                    return row.clip_id, digest, "skipped", None
                clip = load_clip(row, run_cfg.sample_rate)
                aligned = align(clip, plan.count, plan.step, plan.spec, (plan.height, plan.width),
                                pad_last=plan.pad_last)
                clip_cache.write_clip(target, aligned.visual, aligned.audio_specs)
                return row.clip_id, digest, "written", None
            except Exception as exc:  # isolate per-clip failures
                return row.clip_id, None, "failed", f"{type(exc).__name__}: {exc}"

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(work, manifest.rows))
        else:
            outcomes = [work(row) for row in manifest.rows]

        changed = False
        for clip_id, digest, status, message in outcomes:
            if status == "failed":
                result.failed[clip_id] = message
                if index.pop(clip_id, None) is not None:
                    changed = True
            elif status == "written":
                index[clip_id] = digest
                result.written.append(clip_id)
                changed = True
            else:
                result.skipped.append(clip_id)
        if changed:
            _index_path(directory).write_text(json.dumps(dict(sorted(index.items())), indent=1) + "\n")
    return result


def load_aligned(manifest, run_cfg, strategy):
    """Aligned clips for ``strategy`` from the cache, preprocessing as needed."""
    plan = sampling_plan(run_cfg, strategy)
    directory = run_cfg.resolved_cache_dir() / plan.key()
    index = _read_index(directory)
    if any(row.clip_id not in index or not (directory / f"{row.clip_id}.mmdc").exists() for row in manifest):
        outcome = preprocess(manifest, run_cfg, [strategy])
        if outcome.failed:
            first = next(iter(outcome.failed.items()))
            raise DataError(f"{len(outcome.failed)} clips failed preprocessing; first: {first[1]}", first[0])
    clips = []
    for row in manifest:
        visual, specs = clip_cache.read_clip(directory / f"{row.clip_id}.mmdc")
        clips.append(AlignedClip(visual, specs, row.label, row.subject_id, row.clip_id))
    return clips


def fuse_all(aligned, strategy, model_cfg, rfas_seed=0):
    strategy = Strategy.parse(strategy)
    samples = []
    for clip in aligned:
        seed = clip_seed(rfas_seed, clip.clip_id) if strategy is Strategy.RFAS else None
        samples.append(fuse(clip, strategy, model_cfg.frames, seed=seed, height=model_cfg.height))
    return samples


def fused_samples(manifest, run_cfg, strategy=None, rfas_seed=None):
    strategy = strategy or run_cfg.strategy
    rfas_seed = run_cfg.rfas_seed if rfas_seed is None else rfas_seed
    aligned = load_aligned(manifest, run_cfg, strategy)
    return fuse_all(aligned, strategy, run_cfg.model_config(), rfas_seed)


def inputs_digest(manifest):
    h = hashlib.sha256()
    if manifest.path is not None:
        h.update(Path(manifest.path).read_bytes())
    for row in manifest:
        h.update(input_hash(row).encode())
    return h.hexdigest()


@dataclass
class ExperimentResult:
    reports: list
    pooled: object
    curves: list
    weight_files: list
    strategy: str


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cross_validate(samples, run_cfg, strategy, out_dir=None):
    """Train on k-1 folds and evaluate the held-out fold, for every fold."""
    model_cfg = run_cfg.model_config()
    train_cfg = run_cfg.train_config(strategy)
    plan = make_folds([s.subject_id for s in samples], run_cfg.folds, run_cfg.fold_seed)
    reports, curves, weight_files = [], [], []
    for fold in range(plan.k):
        train_set, test_set = plan.split(samples, fold)
        log.info("%s fold %d: %d train / %d test clips", strategy, fold, len(train_set), len(test_set))
        result = train(train_set, train_cfg, model_cfg, dtype=run_cfg.dtype)
        report = evaluate(result.params, test_set)
        reports.append(report)
        curves.append(result.curve())
        if out_dir is not None:
            weights = Path(out_dir) / f"fold{fold}.mmdw"
            save_params(weights, result.params)
            weight_files.append(weights)
            _write_json(Path(out_dir) / f"fold{fold}.report.json", report.to_dict())
            _write_json(Path(out_dir) / f"fold{fold}.curve.json", result.curve())
    pooled = pool_reports(reports)
    if out_dir is not None:
        _write_json(Path(out_dir) / "folds.json", plan.to_dict())
    return ExperimentResult(reports, pooled, curves, weight_files, str(strategy))


def run_experiment(run_cfg, manifest=None):
    """Full cross-validation for ``run_cfg.strategy``; writes reports and weights."""
    manifest = manifest or read_manifest(run_cfg.manifest, run_cfg.num_classes)
    out = Path(run_cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples = fused_samples(manifest, run_cfg)
    result = cross_validate(samples, run_cfg, run_cfg.strategy, out)
    _write_json(out / "pooled.report.json", result.pooled.to_dict())
    (out / "pooled.report.txt").write_text(result.pooled.to_text() + "\n")
    _write_json(out / "summary.json", {
        "config": run_cfg.to_dict(),
        "model": run_cfg.model_config().to_dict(),
        "strategy": run_cfg.strategy,
        "seed": run_cfg.seed,
        "inputs_sha256": inputs_digest(manifest),
        "pooled": {"uar": result.pooled.uar, "war": result.pooled.war},
        "weights": [p.name for p in result.weight_files],
    })
    return result


@dataclass
class ComparisonRow:
    strategy: str
    uar: float
    war: float
    runs: int


def compare_strategies(run_cfg, manifest=None, strategies=None, rfas_seeds=None):
    """Run every strategy on identical folds and seeds.

    RFAS is repeated once per permutation seed and its UAR/WAR averaged.
    Returns rows sorted by ascending WAR, the layout of a results table.
    """
    manifest = manifest or read_manifest(run_cfg.manifest, run_cfg.num_classes)
    strategies = strategies or run_cfg.strategy_list()
    rfas_seeds = rfas_seeds if rfas_seeds is not None else run_cfg.rfas_seed_list()
    out = Path(run_cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model_cfg = run_cfg.model_config()
    rows, details = [], {}
    for name in strategies:
        strategy = Strategy.parse(name)
        aligned = load_aligned(manifest, run_cfg, strategy)
        seeds = rfas_seeds if strategy is Strategy.RFAS else [None]
        uars, wars = [], []
        for seed in seeds:
            samples = fuse_all(aligned, strategy, model_cfg, seed or 0)
            result = cross_validate(samples, run_cfg, strategy.value)
            uars.append(result.pooled.uar)
            wars.append(result.pooled.war)
            details[f"{strategy.value}" + ("" if seed is None else f"@{seed}")] = result.pooled.to_dict()
        rows.append(ComparisonRow(strategy.value, float(np.mean(uars)), float(np.mean(wars)), len(seeds)))
    rows.sort(key=lambda r: (r.war, r.uar, STRATEGY_ORDER.index(r.strategy)))
    _write_json(out / "comparison.json", {
        "rows": [r.__dict__ for r in rows], "runs": details, "config": run_cfg.to_dict(),
    })
    (out / "comparison.txt").write_text(comparison_table(rows) + "\n")
    return rows


def comparison_table(rows):
    lines = [f"{'Method':<22}{'Modality':>9}{'UAR':>8}{'WAR':>8}", "-" * 47]
    for r in rows:
        label = f"MMDER-{r.strategy.upper()}"
        suffix = f" (x{r.runs})" if r.runs > 1 else ""
        lines.append(f"{label:<22}{'V+A':>9}{100 * r.uar:8.2f}{100 * r.war:8.2f}{suffix}")
    return "\n".join(lines)


def token_layout_map(run_cfg, strategy, clip_id="clip", rfas_seed=None):
    """Per-token coordinates, source frames and modality tags for one clip.

    The layout depends only on the strategy, the model geometry and (for
    RFAS) the clip's permutation seed, so no pixel data is needed.
    """
    strategy = Strategy.parse(strategy)
    model_cfg = run_cfg.model_config()
    plan = sampling_plan(run_cfg, strategy)
    blank = np.zeros((plan.count, plan.height, plan.width))
    clip = AlignedClip(blank, blank.copy(), 0, "", clip_id)
    seed = run_cfg.rfas_seed if rfas_seed is None else rfas_seed
    sample = fuse_all([clip], strategy, model_cfg, seed)[0]
    layout = model_cfg.layout
    coords = layout.coords()
    frames = layout.source_frames()
    tags = token_modality(sample, layout)
    tokens = [
        {"index": n, "slab": int(c[0]), "row": int(c[1]), "col": int(c[2]),
         "frames": [int(f) for f in frames[n]], "modality": list(tags[n])}
        for n, c in enumerate(coords)
    ]
    return {
        "strategy": strategy.value,
        "clip_id": clip_id,
        "frames": model_cfg.frames,
        "height": model_cfg.height,
        "width": model_cfg.width,
        "cube": list(model_cfg.cube),
        "num_tokens": layout.num_tokens,
        "token_dim": model_cfg.token_dim,
        "row_split": sample.row_split,
        "frame_modality": list(sample.frame_modality),
        "frame_source": [[m, int(i)] for m, i in sample.source],
        "tokens": tokens,
    }
