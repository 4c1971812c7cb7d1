"""Gender probe: nu-parameterized soft-margin RBF kernel classifier.

Solves the nu-SVC dual

    min 1/2 a' Q a   s.t.  y'a = 0,  sum(a) = nu,  0 <= a_i <= 1/l

by pairwise working-set ascent: both equality constraints restrict feasible
moves to same-class index pairs, so each step picks the most violating pair
within a class (deterministic ties by index) and solves the one-dimensional
subproblem analytically. The decision function is
sign(sum_i a_i y_i K(x_i, x) + b) with K(x, z) = exp(-gamma ||x - z||^2).

Training rows are canonically reordered (label, then coordinates) before
optimization, which makes the fit invariant to input permutation.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceError, ProbeTrainingError

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ProbeConfig:
    nu: float = 0.5
    gamma: Optional[float] = None  # None -> 1 / (d * mean per-coordinate variance)
    kkt_tolerance: float = 1e-3
    max_passes: int = 10_000
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ProbeTrainingError(f"nu must be in (0, 1], got {self.nu}")
        if self.gamma is not None and self.gamma <= 0:
            raise ProbeTrainingError(f"gamma must be positive, got {self.gamma}")
        if self.kkt_tolerance <= 0 or self.max_passes <= 0:
            raise ProbeTrainingError("kkt_tolerance and max_passes must be positive")


@dataclass
class ProbeModel:
    """Trained dual solution restricted to its support vectors."""

    support_vectors: np.ndarray  # m x d
    dual_coef: np.ndarray        # m, = alpha_i (in [0, 1/l])
    labels: np.ndarray           # m, +/-1
    offset: float                # b
    margin: float                # rho
    gamma: float
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """K[i, j] = exp(-gamma * ||a_i - b_j||^2)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def default_gamma(features: np.ndarray) -> float:
    """Scale heuristic: 1 / (d * mean per-coordinate variance)."""
    d = features.shape[1]
    var = float(features.var(axis=0).mean())
    if var <= 1e-300:
        return 1.0
    return 1.0 / (d * var)


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    keys = [X[:, j] for j in range(X.shape[1] - 1, -1, -1)] + [y]
    return np.lexsort(keys)


def _select_pair(G, alpha, idx, cap):
    """Most violating (increase, decrease) pair within one class."""
    up = idx[alpha[idx] < cap - 1e-14]
    dn = idx[alpha[idx] > 1e-14]
    if up.size == 0 or dn.size == 0:
        return -1, -1, -np.inf
    i = up[int(np.argmin(G[up]))]
    j = dn[int(np.argmax(G[dn]))]
    return int(i), int(j), float(G[j] - G[i])


def _recover_offsets(s, y, alpha, cap):
    """b and rho from the KKT conditions on each class's support vectors."""
    free_eps = cap * 1e-8
    out = {}
    for cls in (1, -1):
        mask = y == cls
        s_cls = s[mask]
        a_cls = alpha[mask]
        free = (a_cls > free_eps) & (a_cls < cap - free_eps)
        if np.any(free):
            out[cls] = float(s_cls[free].mean())
            continue
        at_cap = a_cls >= cap - free_eps
        at_zero = a_cls <= free_eps
        if cls == 1:
            lo = s_cls[at_cap].max() if np.any(at_cap) else None
            hi = s_cls[at_zero].min() if np.any(at_zero) else None
        else:
            lo = s_cls[at_zero].max() if np.any(at_zero) else None
            hi = s_cls[at_cap].min() if np.any(at_cap) else None
        if lo is None and hi is None:
            out[cls] = 0.0
        elif lo is None:
            out[cls] = float(hi)
        elif hi is None:
            out[cls] = float(lo)
        else:
            out[cls] = float((lo + hi) / 2.0)
    r_pos, r_neg = out[1], out[-1]
    b = -(r_pos + r_neg) / 2.0
    rho = (r_pos - r_neg) / 2.0
    return b, rho


def train(
    features: np.ndarray, labels: Sequence[int], config: ProbeConfig = ProbeConfig()
) -> ProbeModel:
    """Fit the nu-SVC dual to KKT tolerance; deterministic for fixed inputs."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ProbeTrainingError(f"feature/label shape mismatch: {X.shape} vs {y.shape}")
    if not np.all(np.isfinite(X)):
        raise ProbeTrainingError("non-finite feature values")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ProbeTrainingError("labels must be +1 or -1")
    n = X.shape[0]
    if n < 2 or np.unique(y).size < 2:
        raise ProbeTrainingError("need at least 2 rows with both classes present")

    order = _canonical_order(X, y)
    X, y = X[order], y[order]

    scaler = None
    if config.standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd <= 1e-300] = 1.0
        X = (X - mu) / sd
        scaler = (mu, sd)

    gamma = config.gamma if config.gamma is not None else default_gamma(X)
    n_pos = int(np.sum(y > 0))
    n_neg = n - n_pos
    nu_max = 2.0 * min(n_pos, n_neg) / n
    if config.nu > nu_max + 1e-12:
        raise ProbeTrainingError(
            f"nu={config.nu} infeasible for class sizes ({n_pos}, {n_neg}); max {nu_max:.4f}"
        )

    cap = 1.0 / n
    alpha = np.zeros(n)
    for cls in (1.0, -1.0):
        remaining = config.nu / 2.0
        for i in np.flatnonzero(y == cls):
            take = min(cap, remaining)
            alpha[i] = take
            remaining -= take
            if remaining <= 0:
                break

    K = rbf_kernel(X, X, gamma)
    Q = (y[:, None] * y[None, :]) * K
    G = Q @ alpha
    pos_idx = np.flatnonzero(y > 0)
    neg_idx = np.flatnonzero(y < 0)

    residual = np.inf
    converged = False
    for _ in range(config.max_passes):
        pi, pj, pv = _select_pair(G, alpha, pos_idx, cap)
        ni, nj, nv = _select_pair(G, alpha, neg_idx, cap)
        residual = max(pv, nv, 0.0)
        if residual <= config.kkt_tolerance:
            converged = True
            break
        i, j = (pi, pj) if pv >= nv else (ni, nj)
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        room = min(cap - alpha[i], alpha[j])
        if eta > 1e-14:
            delta = min((G[j] - G[i]) / eta, room)
        else:
            delta = room
        if delta <= 0.0:
            converged = True  # numerically pinned; treat as done at this residual
            break
        alpha[i] += delta
        alpha[j] -= delta
        G += delta * (Q[:, i] - Q[:, j])
    if not converged and residual > config.kkt_tolerance:
        raise ConvergenceError(
            f"no convergence in {config.max_passes} passes (residual {residual:.3e})",
            residual,
        )

    s = y * G  # s_i = sum_j alpha_j y_j K_ij
    b, rho = _recover_offsets(s, y, alpha, cap)
    dual_objective = float(0.5 * alpha @ G)

    sv_mask = alpha > cap * 1e-8
    return ProbeModel(
        support_vectors=X[sv_mask].copy(),
        dual_coef=alpha[sv_mask].copy(),
        labels=y[sv_mask].copy(),
        offset=b,
        margin=rho,
        gamma=gamma,
        metadata={
            "n_train": n,
            "nu": config.nu,
            "kkt_residual": float(residual),
            "kkt_tolerance": config.kkt_tolerance,
            "dual_objective": dual_objective,
            "gamma_source": "explicit" if config.gamma is not None else "scale-heuristic",
            "seed": config.seed,
            "standardize": config.standardize,
            "scaler_mean": None if scaler is None else scaler[0].tolist(),
            "scaler_std": None if scaler is None else scaler[1].tolist(),
            "sv_fraction": float(np.sum(sv_mask)) / n,
        },
    )


def decision_values(model: ProbeModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.dim:
        raise ProbeTrainingError(f"dim mismatch: model {model.dim}, input {X.shape[1]}")
    if model.metadata.get("standardize"):
        mu = np.asarray(model.metadata["scaler_mean"])
        sd = np.asarray(model.metadata["scaler_std"])
        X = (X - mu) / sd
    K = rbf_kernel(model.support_vectors, X, model.gamma)
    return (model.dual_coef * model.labels) @ K + model.offset


def predict(model: ProbeModel, x: np.ndarray) -> tuple[int, float]:
    """(label, margin) for one vector; sign(0) is defined as +1."""
    value = float(decision_values(model, np.atleast_2d(x))[0])
    return (1 if value >= 0.0 else -1), value


def predict_many(model: ProbeModel, X: np.ndarray) -> np.ndarray:
    values = decision_values(model, X)
    return np.where(values >= 0.0, 1, -1)


def evaluate_by_group(
    model: ProbeModel,
    features: np.ndarray,
    labels: Sequence[int],
    groups: Sequence[str],
) -> dict:
    """Accuracy (percent, one decimal) per group tag and overall."""
    y = np.asarray(labels)
    g = np.asarray(groups)
    if not (len(y) == len(g) == np.atleast_2d(features).shape[0]):
        raise ProbeTrainingError("features/labels/groups must be aligned")
    pred = predict_many(model, features)
    correct = pred == y
    report = {
        "overall": round(100.0 * float(correct.mean()), 1),
        "groups": {},
        "counts": {},
    }
    for tag in sorted(set(g.tolist())):
        mask = g == tag
        report["groups"][tag] = round(100.0 * float(correct[mask].mean()), 1)
        report["counts"][tag] = int(mask.sum())
    return report


def tune_nu(
    features: np.ndarray,
    labels: Sequence[int],
    grid: Sequence[float] = tuple(round(0.1 * i, 1) for i in range(1, 11)),
    heldout_fraction: float = 0.2,
    seed: int = 0,
    base_config: ProbeConfig = ProbeConfig(),
) -> tuple[ProbeConfig, list[dict]]:
    """Pick the grid nu with the best held-out accuracy; ties favor smaller nu.

    The split is stratified per class and deterministic in the seed. Grid
    points whose training fails are recorded and skipped.
    """
    if not grid:
        raise ProbeTrainingError("empty nu grid")
    for value in grid:
        if not 0.0 < value <= 1.0:
            raise ProbeTrainingError(f"grid nu {value} outside (0, 1]")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    heldout_idx: list[int] = []
    train_idx: list[int] = []
    for cls in (1, -1):
        cls_idx = np.flatnonzero(y == cls)
        perm = cls_idx[rng.permutation(cls_idx.size)]
        n_held = max(1, int(round(heldout_fraction * cls_idx.size)))
        n_held = min(n_held, cls_idx.size - 1)
        heldout_idx.extend(perm[:n_held].tolist())
        train_idx.extend(perm[n_held:].tolist())
    heldout_idx.sort()
    train_idx.sort()
    X_tr, y_tr = X[train_idx], y[train_idx]
    X_ho, y_ho = X[heldout_idx], y[heldout_idx]

    results: list[dict] = []
    best: Optional[tuple[float, float]] = None  # (accuracy, -nu) maximized
    for value in grid:
        cfg = ProbeConfig(
            nu=float(value),
            gamma=base_config.gamma,
            kkt_tolerance=base_config.kkt_tolerance,
            max_passes=base_config.max_passes,
            seed=seed,
            standardize=base_config.standardize,
        )
        try:
            model = train(X_tr, y_tr, cfg)
        except ProbeTrainingError as exc:
            results.append({"nu": float(value), "error": str(exc)})
            continue
        acc = float(np.mean(predict_many(model, X_ho) == y_ho))
        results.append({"nu": float(value), "heldout_accuracy": acc})
        if best is None or (acc, -value) > best:
            best = (acc, -value)
    if best is None:
        raise ProbeTrainingError("training failed on every grid point")
    best_nu = -best[1]
    best_cfg = ProbeConfig(
        nu=float(best_nu),
        gamma=base_config.gamma,
        kkt_tolerance=base_config.kkt_tolerance,
        max_passes=base_config.max_passes,
        seed=seed,
        standardize=base_config.standardize,
    )
    return best_cfg, results


def load_probe_dataset(
    manifest_path: str | Path,
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Load (features, labels, groups) from a probe dataset manifest.

    The manifest is JSONL with records {"store", "sentence_id", "token_index",
    "gender"}; store paths are resolved relative to the manifest's directory.
    Gender "M" maps to label +1, "F" to -1; the group tag is the gender.
    """
    from .store import open_store, read_vectors

    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    rows: list[tuple[str, str, int, str]] = []
    with open(manifest_path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                rows.append(
                    (rec["store"], rec["sentence_id"], int(rec["token_index"]), rec["gender"])
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ProbeTrainingError(
                    f"{manifest_path}:{line_no}: bad probe dataset record: {exc}"
                ) from exc
            if rows[-1][3] not in ("M", "F"):
                raise ProbeTrainingError(
                    f"{manifest_path}:{line_no}: gender must be M or F, got {rows[-1][3]!r}"
                )
    if not rows:
        raise ProbeTrainingError(f"{manifest_path}: empty probe dataset")
    stores = {}
    features = []
    labels = []
    groups = []
    for store_rel, sentence_id, token_index, gender in rows:
        store_path = Path(store_rel)
        if not store_path.is_absolute():
            store_path = base / store_path
        key = str(store_path)
        if key not in stores:
            stores[key] = open_store(store_path)
        vec = read_vectors(stores[key], sentence_id, (token_index, token_index))[0]
        features.append(vec.astype(np.float64))
        labels.append(1 if gender == "M" else -1)
        groups.append(gender)
    return np.vstack(features), np.asarray(labels), groups


def _encode_array(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode_array(s: str, shape: tuple[int, ...]) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").reshape(shape).copy()


def save_model(model: ProbeModel, path: str | Path) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "kind": "nu-svc-rbf",
        "n_support": int(model.support_vectors.shape[0]),
        "dim": model.dim,
        "gamma": model.gamma,
        "offset": model.offset,
        "margin": model.margin,
        "support_vectors": _encode_array(model.support_vectors),
        "dual_coef": _encode_array(model.dual_coef),
        "labels": model.labels.astype(int).tolist(),
        "metadata": model.metadata,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ProbeModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "nu-svc-rbf" or doc.get("version") != MODEL_FORMAT_VERSION:
        raise ProbeTrainingError(f"{path}: not a version-{MODEL_FORMAT_VERSION} nu-svc model")
    m, d = doc["n_support"], doc["dim"]
    return ProbeModel(
        support_vectors=_decode_array(doc["support_vectors"], (m, d)),
        dual_coef=_decode_array(doc["dual_coef"], (m,)),
        labels=np.asarray(doc["labels"], dtype=np.float64),
        offset=float(doc["offset"]),
        margin=float(doc["margin"]),
        gamma=float(doc["gamma"]),
        metadata=doc.get("metadata", {}),
    )
