"""Loss, recall metrics, subject-independent folds and the fine-tuning loop."""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import model as mdl
from . import numerics as nm
from .errors import ContractError, NumericError

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 1e-2
    weight_decay: float = 0.05
    epochs: int = 100
    batch_size: int = 8
    seed: int = 0
    strategy: str = "fslf"
    preset: str = "desk"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_schedule: str = "constant"
    workers: int = 1
    stop_at_train_war: float | None = None

    def __post_init__(self):
        if self.lr < 0:
            raise ContractError(f"lr must be non-negative, got {self.lr}")
        if self.epochs < 1:
            raise ContractError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ContractError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr_schedule != "constant":
            raise ContractError(f"only the constant schedule is implemented, got {self.lr_schedule!r}")
        if self.workers < 1:
            raise ContractError(f"workers must be >= 1, got {self.workers}")


def cross_entropy(logits, label):
    """Sparse categorical cross-entropy for one logit vector (a Tensor)."""
    if not isinstance(logits, nm.Tensor):
        logits = nm.Tensor(logits, dtype=np.float64)
    return nm.cross_entropy(logits, np.array([label]) if np.ndim(label) == 0 else label)


@dataclass
class EvalReport:
    confusion: np.ndarray
    uar: float
    war: float
    excluded_classes: list = field(default_factory=list)
    per_fold: list = field(default_factory=list)
    predictions: list = field(default_factory=list)

    @property
    def num_classes(self):
        return self.confusion.shape[0]

    def to_dict(self):
        return {
            "num_classes": int(self.num_classes),
            "uar": self.uar,
            "war": self.war,
            "confusion": self.confusion.tolist(),
            "excluded_classes": list(self.excluded_classes),
            "support": self.confusion.sum(axis=1).tolist(),
            "per_fold": [dict(f) for f in self.per_fold],
            "predictions": [dict(p) for p in self.predictions],
        }

    def to_text(self):
        k = self.num_classes
        lines = [f"UAR {100 * self.uar:6.2f}   WAR {100 * self.war:6.2f}   n={int(self.confusion.sum())}"]
        lines.append("true\\pred " + " ".join(f"{j:>5d}" for j in range(k)) + "  recall")
        for i in range(k):
            row = self.confusion[i]
            recall = f"{row[i] / row.sum():6.3f}" if row.sum() else "     -"
            lines.append(f"{i:>9d} " + " ".join(f"{v:>5d}" for v in row) + "  " + recall)
        for f in self.per_fold:
            lines.append(f"fold {f['fold']}: UAR {100 * f['uar']:6.2f}  WAR {100 * f['war']:6.2f}  n={f['n']}")
        return "\n".join(lines)


def confusion_matrix(preds, labels, num_classes):
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def report_from_confusion(cm, warn=True):
    """UAR over classes with support; WAR = trace / total."""
    cm = np.asarray(cm, dtype=np.int64)
    support = cm.sum(axis=1)
    total = int(cm.sum())
    if total == 0:
        raise ContractError("cannot compute recall from an empty confusion matrix")
    present = support > 0
    excluded = [int(i) for i in np.flatnonzero(~present)]
    if excluded and warn:
        warnings.warn(f"classes {excluded} have no samples and are excluded from UAR", stacklevel=3)
    recalls = np.diag(cm)[present] / support[present]
    return EvalReport(cm, float(recalls.mean()), float(np.trace(cm) / total), excluded)


def metrics(preds, labels, num_classes, warn=True):
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise ContractError(f"preds {preds.shape} and labels {labels.shape} differ in length")
    if preds.size == 0:
        raise ContractError("metrics of an empty prediction set")
    for name, arr in (("preds", preds), ("labels", labels)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ContractError(f"{name} contain values outside [0, {num_classes})")
    return report_from_confusion(confusion_matrix(preds, labels, num_classes), warn=warn)


def pool_reports(reports, warn=True):
    """Sum fold confusion matrices, then compute recalls on the total."""
    if not reports:
        raise ContractError("no fold reports to pool")
    pooled = report_from_confusion(sum(r.confusion for r in reports), warn=warn)
    pooled.per_fold = [
        {"fold": i, "uar": r.uar, "war": r.war, "n": int(r.confusion.sum())} for i, r in enumerate(reports)
    ]
    pooled.predictions = [p for r in reports for p in r.predictions]
    return pooled


@dataclass
class FoldPlan:
    k: int
    assignments: dict

    def fold_subjects(self, fold):
        return sorted(s for s, f in self.assignments.items() if f == fold)

    def sizes(self):
        return [len(self.fold_subjects(f)) for f in range(self.k)]

    def split(self, items, fold, subject=lambda item: item.subject_id):
        """Partition ``items`` into ``(train, test)`` for held-out ``fold``."""
        if not 0 <= fold < self.k:
            raise ContractError(f"fold {fold} outside [0, {self.k})")
        train, test = [], []
        for item in items:
            sid = subject(item)
            if sid not in self.assignments:
                raise ContractError(f"subject {sid!r} is not in the fold plan")
            (test if self.assignments[sid] == fold else train).append(item)
        return train, test

    def to_dict(self):
        return {"k": self.k, "assignments": dict(sorted(self.assignments.items()))}


def make_folds(subject_ids, k, seed=0):
    """Seeded shuffle of the unique subjects, dealt round-robin into ``k`` folds."""
    subjects = sorted(set(str(s) for s in subject_ids))
    if k < 2:
        raise ContractError(f"need at least 2 folds, got {k}")
    if len(subjects) < k:
        raise ContractError(f"{len(subjects)} subjects cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(len(subjects))
    return FoldPlan(k, {subjects[j]: i % k for i, j in enumerate(order)})


@dataclass
class TrainResult:
    params: mdl.ModelParams
    epoch_losses: list
    step_losses: list
    train_war: list

    def curve(self):
        return {
            "epoch_loss": list(self.epoch_losses),
            "step_loss": list(self.step_losses),
            "train_war": list(self.train_war),
        }


def stack_tokens(samples, model_cfg, dtype):
    """Patchify every fused sample into one ``(n, N, P)`` array."""
    x = np.stack([s.x for s in samples]).astype(dtype, copy=False)
    return mdl.patchify_array(x, model_cfg.layout)


def _batch_grads(params, tokens, labels, workers):
    """Mean loss and per-parameter gradients for one mini-batch.

    With ``workers > 1`` each member gets its own graph on a thread pool and
    member gradients are summed in index order.
    """
    trainable = params.trainable()
    if workers == 1:
        loss = nm.cross_entropy(mdl.forward(tokens, params), labels)
        grads = nm.backward(loss, store=False)
        return float(loss.data), [grads.get(p) for p in trainable]

    def member(i):
        loss = nm.cross_entropy(mdl.forward(tokens[i : i + 1], params), labels[i : i + 1])
        grads = nm.backward(loss, store=False)
        return float(loss.data), [grads.get(p) for p in trainable]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(member, range(len(labels))))
    n = len(labels)
    total = []
    for j, p in enumerate(trainable):
        acc = None
        for _, grads in results:
            g = grads[j]
            if g is not None:
                acc = g.copy() if acc is None else acc + g
        total.append(None if acc is None else (acc / n).astype(p.dtype))
    return sum(r[0] for r in results) / n, total


def train(samples, cfg, model_cfg, params=None, dtype=None):
    """Mini-batch AdamW fine-tuning on fused samples.

    Batches are drawn from a per-epoch shuffle seeded by ``(seed, epoch)``.
    The learning rate is constant. Returns a :class:`TrainResult`.
    """
    if not samples:
        raise ContractError("training set is empty")
    dtype = np.dtype(dtype or nm.get_default_dtype())
    bad = [s.clip_id for s in samples if not 0 <= s.label < model_cfg.num_classes]
    if bad:
        raise ContractError(f"labels outside [0, {model_cfg.num_classes}) for clips {bad[:5]}")
    if params is None:
        params = mdl.init_params(model_cfg, seed=cfg.seed, dtype=dtype)
    tokens = stack_tokens(samples, model_cfg, dtype)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    opt = nm.AdamW(
        params.trainable(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps,
        weight_decay=cfg.weight_decay,
    )
    epoch_losses, step_losses, train_war = [], [], []
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(samples))
        weighted = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = _batch_grads(params, tokens[idx], labels[idx], cfg.workers)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss {loss} at epoch {epoch}, step {len(step_losses)}")
            opt.step(grads)
            step_losses.append(loss)
            weighted += loss * len(idx)
        epoch_losses.append(weighted / len(order))
        if cfg.stop_at_train_war is not None:
            preds, _ = mdl.predict(params, tokens)
            train_war.append(float(np.mean(preds == labels)))
            log.debug("epoch %d loss %.4f train WAR %.3f", epoch, epoch_losses[-1], train_war[-1])
            if train_war[-1] >= cfg.stop_at_train_war:
                break
        else:
            log.debug("epoch %d loss %.4f", epoch, epoch_losses[-1])
    return TrainResult(params, epoch_losses, step_losses, train_war)


def evaluate(params, samples, batch_size=32, warn=True):
    """Argmax predictions over ``samples`` summarised as an :class:`EvalReport`."""
    if not samples:
        raise ContractError("evaluation set is empty")
    cfg = params.config
    dtype = params["patch_embed.weight"].dtype
    preds = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        p, _ = mdl.predict(params, stack_tokens(chunk, cfg, dtype))
        preds.extend(int(v) for v in p)
    labels = [int(s.label) for s in samples]
    report = metrics(np.array(preds), np.array(labels), cfg.num_classes, warn=warn)
    report.predictions = [
        {"clip_id": s.clip_id, "subject_id": s.subject_id, "label": y, "pred": p}
        for s, y, p in zip(samples, labels, preds)
    ]
    return report


def config_dict(cfg):
    return asdict(cfg)
