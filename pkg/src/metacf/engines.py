"""Matrix-completion engines: baseline, fuzzy k-means, matrix factorization,
nonlinear PCA, and unsupervised backpropagation.

All five share one contract: take a partially observed accuracy matrix,
return a dense completion where observed cells are copied verbatim and
predictions are clipped into [0, 100].  Training is deterministic given the
setting seed; iterative engines guarantee final loss <= initial loss via a
rollback/learning-rate-halving safeguard.

The nonlinear-PCA and UBP engines are the same latent+decoder family: each
row owns a free latent vector, a shared decoder maps latents to all column
values through a bounded sigmoidal output scaled to [0, 100].  NLPCA's
decoder is affine; UBP's is a tanh multilayer perceptron trained in three
phases (latents only, decoder only, joint).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DivergenceError
from .matrix import PerformanceMatrix
from .seeds import normalize_seed

__all__ = [
    "ENGINE_NAMES",
    "EngineSetting",
    "FitReport",
    "CompletedMatrix",
    "FuzzyFit",
    "complete",
    "complete_baseline",
    "complete_fkm",
    "complete_mf",
    "complete_nlpca",
    "complete_ubp",
    "default_engine_grid",
    "fkm_fit",
    "mf_loss_and_grad",
    "mf_param_count",
    "latent_loss_and_grad",
    "latent_param_count",
]

ENGINE_NAMES = ("baseline", "fkm", "mf", "nlpca", "ubp")

_ALLOWED_HYPERPARAMS = {
    "baseline": frozenset(),
    "fkm": frozenset({"cluster_count", "fuzzifier", "max_iters", "tolerance"}),
    "mf": frozenset(
        {"rank", "learning_rate", "regularization", "max_epochs", "tolerance"}
    ),
    "nlpca": frozenset(
        {
            "latent_dim",
            "hidden_layers",
            "learning_rate",
            "regularization",
            "max_epochs",
            "tolerance",
        }
    ),
    "ubp": frozenset(
        {
            "latent_dim",
            "hidden_layers",
            "learning_rate",
            "regularization",
            "max_epochs",
            "tolerance",
        }
    ),
}

_MF_DEFAULTS = {
    "rank": 8,
    "learning_rate": 0.01,
    "regularization": 0.001,
    "max_epochs": 500,
    "tolerance": 1e-5,
}
_FKM_DEFAULTS = {
    "cluster_count": 4,
    "fuzzifier": 2.0,
    "max_iters": 100,
    "tolerance": 1e-5,
}
_LATENT_DEFAULTS = {
    "latent_dim": 4,
    "learning_rate": 0.02,
    "regularization": 1e-4,
    "max_epochs": 500,
    "tolerance": 1e-5,
}

_MAX_HALVINGS = 10
_MOMENTUM = 0.9


@dataclass(frozen=True)
class EngineSetting:
    """One engine plus a concrete hyperparameter assignment and seed.

    Only hyperparameters that differ from the engine defaults need to be
    given; ``label()`` renders those into a stable setting identifier.
    """

    engine: str
    hyperparams: Mapping[str, object] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.engine not in ENGINE_NAMES:
            raise ValueError(
                f"unknown engine {self.engine!r}; valid engines: "
                + ", ".join(ENGINE_NAMES)
            )
        hp = dict(self.hyperparams)
        unknown = set(hp) - _ALLOWED_HYPERPARAMS[self.engine]
        if unknown:
            raise ValueError(
                f"engine {self.engine} does not accept hyperparameters "
                f"{sorted(unknown)}"
            )
        if self.engine == "nlpca" and hp.get("hidden_layers"):
            raise ValueError("nlpca uses an affine decoder; hidden_layers must be empty")
        if self.engine == "ubp" and "hidden_layers" in hp and not hp["hidden_layers"]:
            raise ValueError("ubp requires at least one hidden layer")
        object.__setattr__(self, "hyperparams", hp)

    def label(self) -> str:
        """Stable identifier used to group sweep records, e.g. ``mf|rank=4``."""
        if not self.hyperparams:
            return self.engine
        parts = ",".join(
            f"{k}={self.hyperparams[k]!r}" if isinstance(self.hyperparams[k], list)
            else f"{k}={self.hyperparams[k]}"
            for k in sorted(self.hyperparams)
        )
        return f"{self.engine}|{parts}"


@dataclass(frozen=True)
class FitReport:
    iterations_run: int
    initial_loss: float
    final_loss: float
    wall_time_seconds: float


@dataclass
class CompletedMatrix:
    """Dense completion: observed entries verbatim, predictions elsewhere."""

    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    values: np.ndarray
    observed_mask: np.ndarray
    fit_report: FitReport

    def row_pairs(self, i: int) -> list[tuple[str, float]]:
        """Row ``i`` as (config_id, value) pairs in column order."""
        return [(cid, float(self.values[i, j])) for j, cid in enumerate(self.col_ids)]

    def to_matrix(self) -> PerformanceMatrix:
        """The completion as a fully observed PerformanceMatrix."""
        return PerformanceMatrix.from_dense(self.row_ids, self.col_ids, self.values)


def _require_observed(mask: np.ndarray) -> None:
    if not mask.any():
        raise ValueError("matrix has no observed cells")


def _resolve(setting: EngineSetting, defaults: Mapping[str, object]) -> dict:
    hp = dict(defaults)
    hp.update(setting.hyperparams)
    return hp


def _finish(
    masked: PerformanceMatrix,
    values: np.ndarray,
    mask: np.ndarray,
    predictions: np.ndarray,
    iterations: int,
    initial_loss: float,
    final_loss: float,
    t0: float,
) -> CompletedMatrix:
    out = np.clip(predictions, 0.0, 100.0)
    out[mask] = values[mask]
    report = FitReport(
        iterations_run=iterations,
        initial_loss=float(initial_loss),
        final_loss=float(final_loss),
        wall_time_seconds=time.perf_counter() - t0,
    )
    return CompletedMatrix(masked.row_ids, masked.col_ids, out, mask, report)


def _column_fill(values: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Observed column means with the global observed mean where a column is empty."""
    counts = mask.sum(axis=0)
    sums = np.where(mask, values, 0.0).sum(axis=0)
    global_mean = float(values[mask].mean())
    col_means = np.where(counts > 0, sums / np.maximum(counts, 1), global_mean)
    return col_means, global_mean


# --------------------------------------------------------------------------
# baseline
# --------------------------------------------------------------------------

def complete_baseline(masked: PerformanceMatrix) -> CompletedMatrix:
    """Predict every missing cell as its column's observed mean.

    Columns with no observations fall back to the global observed mean.
    """
    t0 = time.perf_counter()
    values, mask = masked.to_dense()
    _require_observed(mask)
    col_means, _ = _column_fill(values, mask)
    predictions = np.broadcast_to(col_means, mask.shape).copy()
    mse = float(((predictions - values)[mask] ** 2).mean())
    return _finish(masked, values, mask, predictions, 0, mse, mse, t0)


# --------------------------------------------------------------------------
# matrix factorization
# --------------------------------------------------------------------------

def mf_param_count(n_rows: int, n_cols: int, rank: int) -> int:
    return 1 + n_rows + n_cols + (n_rows + n_cols) * rank


def _mf_unpack(flat: np.ndarray, n_rows: int, n_cols: int, rank: int):
    mu = float(flat[0])
    pos = 1
    b = flat[pos : pos + n_rows]
    pos += n_rows
    c = flat[pos : pos + n_cols]
    pos += n_cols
    U = flat[pos : pos + n_rows * rank].reshape(n_rows, rank)
    pos += n_rows * rank
    V = flat[pos : pos + n_cols * rank].reshape(n_cols, rank)
    return mu, b, c, U, V


def mf_loss_and_grad(
    values: np.ndarray,
    mask: np.ndarray,
    flat: np.ndarray,
    rank: int,
    regularization: float,
) -> tuple[float, np.ndarray]:
    """Full-batch objective and exact gradient of the biased factor model.

    With e_ij = r_ij - (mu + b_i + c_j + U_i.V_j) over observed cells and
    n_i, m_j the per-row/column observed counts:

        L = (1/N) [ sum e^2
                    + reg (sum_i n_i (|U_i|^2 + b_i^2)
                           + sum_j m_j (|V_j|^2 + c_j^2)) ]

    The count weights mirror the per-occurrence decay the SGD updates apply,
    so this is the objective the training loop tracks.  Parameter layout of
    ``flat``: mu, b, c, U (row-major), V (row-major).
    """
    n_rows, n_cols = mask.shape
    rows, cols = np.nonzero(mask)
    r = values[rows, cols]
    N = r.size
    mu, b, c, U, V = _mf_unpack(np.asarray(flat, dtype=float), n_rows, n_cols, rank)
    e = r - (mu + b[rows] + c[cols] + np.einsum("ij,ij->i", U[rows], V[cols]))
    n_i = np.bincount(rows, minlength=n_rows).astype(float)
    m_j = np.bincount(cols, minlength=n_cols).astype(float)
    penalty = regularization * (
        n_i @ (U * U).sum(axis=1)
        + n_i @ (b * b)
        + m_j @ (V * V).sum(axis=1)
        + m_j @ (c * c)
    )
    loss = float((e @ e + penalty) / N)

    E = np.zeros(mask.shape)
    E[rows, cols] = e
    g_mu = -2.0 * e.sum() / N
    g_b = (-2.0 * E.sum(axis=1) + 2.0 * regularization * n_i * b) / N
    g_c = (-2.0 * E.sum(axis=0) + 2.0 * regularization * m_j * c) / N
    g_U = (-2.0 * (E @ V) + 2.0 * regularization * n_i[:, None] * U) / N
    g_V = (-2.0 * (E.T @ U) + 2.0 * regularization * m_j[:, None] * V) / N
    grad = np.concatenate([[g_mu], g_b, g_c, g_U.ravel(), g_V.ravel()])
    return loss, grad


def complete_mf(masked: PerformanceMatrix, setting: EngineSetting) -> CompletedMatrix:
    """Biased matrix factorization trained by minibatch SGD on observed cells.

    Prediction for cell (i, j) is mu + b_i + c_j + U_i.V_j, clipped to
    [0, 100] at output time.  Each epoch visits the observed cells in a
    seeded shuffled order; an epoch that increases the tracked objective is
    rolled back and retried at half the learning rate (at most 10 halvings).
    """
    if setting.engine != "mf":
        raise ValueError(f"expected an mf setting, got {setting.engine}")
    hp = _resolve(setting, _MF_DEFAULTS)
    rank = int(hp["rank"])
    lr = float(hp["learning_rate"])
    lam = float(hp["regularization"])
    max_epochs = int(hp["max_epochs"])
    tol = float(hp["tolerance"])
    if rank < 1:
        raise ValueError("rank must be a positive integer")
    if lr <= 0 or lam <= 0:
        raise ValueError("learning_rate and regularization must be > 0")

    t0 = time.perf_counter()
    values, mask = masked.to_dense()
    _require_observed(mask)
    n_rows, n_cols = mask.shape
    rows, cols = np.nonzero(mask)
    r = values[rows, cols]
    N = r.size
    n_i = np.bincount(rows, minlength=n_rows).astype(float)
    m_j = np.bincount(cols, minlength=n_cols).astype(float)

    rng = np.random.default_rng(normalize_seed(setting.seed))
    U = rng.uniform(-0.1, 0.1, (n_rows, rank))
    V = rng.uniform(-0.1, 0.1, (n_cols, rank))
    b = np.zeros(n_rows)
    c = np.zeros(n_cols)
    mu = float(r.mean())
    batch = int(np.clip(N // 64, 128, 4096))

    def objective() -> float:
        e = r - (mu + b[rows] + c[cols] + np.einsum("ij,ij->i", U[rows], V[cols]))
        penalty = lam * (
            n_i @ (U * U).sum(axis=1)
            + n_i @ (b * b)
            + m_j @ (V * V).sum(axis=1)
            + m_j @ (c * c)
        )
        return float((e @ e + penalty) / N)

    initial = objective()
    prev = initial
    halvings = 0
    epochs_done = 0
    while epochs_done < max_epochs:
        snapshot = (mu, b.copy(), c.copy(), U.copy(), V.copy())
        order = rng.permutation(N)
        for start in range(0, N, batch):
            sel = order[start : start + batch]
            rb, cb = rows[sel], cols[sel]
            Ug, Vg = U[rb], V[cb]
            e = r[sel] - (mu + b[rb] + c[cb] + np.einsum("ij,ij->i", Ug, Vg))
            np.add.at(U, rb, lr * (e[:, None] * Vg - lam * Ug))
            np.add.at(V, cb, lr * (e[:, None] * Ug - lam * Vg))
            np.add.at(b, rb, lr * (e - lam * b[rb]))
            np.add.at(c, cb, lr * (e - lam * c[cb]))
            # the global offset sees every cell, so its update is mean-scaled
            mu += lr * float(e.mean())
        loss = objective()
        if not np.isfinite(loss):
            raise DivergenceError(f"mf: non-finite loss at epoch {epochs_done + 1}")
        if loss > prev:
            mu, b, c, U, V = snapshot
            halvings += 1
            if halvings > _MAX_HALVINGS:
                break
            lr *= 0.5
            continue
        epochs_done += 1
        improvement = (prev - loss) / max(abs(prev), 1e-12)
        prev = loss
        if improvement < tol:
            break

    predictions = mu + b[:, None] + c[None, :] + U @ V.T
    return _finish(masked, values, mask, predictions, epochs_done, initial, prev, t0)


# --------------------------------------------------------------------------
# fuzzy k-means
# --------------------------------------------------------------------------

@dataclass
class FuzzyFit:
    """Internal state of a fuzzy clustering fit, exposed for inspection."""

    memberships: np.ndarray  # (n_rows, clusters); each row sums to 1
    centroids: np.ndarray  # (clusters, n_cols)
    report: FitReport


def fkm_fit(masked: PerformanceMatrix, setting: EngineSetting) -> FuzzyFit:
    """Fuzzy k-means over dataset rows with partial-distance handling.

    Distances use only the row's observed coordinates, rescaled by
    n_cols / #observed so rows with different sparsity are comparable; rows
    with no observed coordinates get uniform memberships.  Centroid
    coordinates are membership-weighted means over observed entries; a
    column nobody observes keeps its initial column-mean fill.
    """
    if setting.engine != "fkm":
        raise ValueError(f"expected an fkm setting, got {setting.engine}")
    hp = _resolve(setting, _FKM_DEFAULTS)
    n_clusters = int(hp["cluster_count"])
    fuzzifier = float(hp["fuzzifier"])
    max_iters = int(hp["max_iters"])
    tol = float(hp["tolerance"])
    if fuzzifier <= 1.0:
        raise ValueError("fuzzifier must be > 1")

    t0 = time.perf_counter()
    values, mask = masked.to_dense()
    _require_observed(mask)
    n_rows, n_cols = mask.shape
    if n_clusters < 1 or n_clusters > n_rows:
        raise ValueError(
            f"cluster_count must be in [1, {n_rows}], got {n_clusters}"
        )

    X = np.where(mask, values, 0.0)
    col_fill, _ = _column_fill(values, mask)
    rng = np.random.default_rng(normalize_seed(setting.seed))
    chosen = rng.choice(n_rows, size=n_clusters, replace=False)
    centroids = np.where(mask[chosen], X[chosen], col_fill[None, :])

    shared = mask.sum(axis=1).astype(float)
    scale = np.where(shared > 0, n_cols / np.maximum(shared, 1.0), 0.0)
    exponent = 1.0 / (fuzzifier - 1.0)

    def raw_distances(cent: np.ndarray) -> np.ndarray:
        d2 = np.empty((n_rows, n_clusters))
        for k in range(n_clusters):
            diff = (X - cent[k][None, :]) * mask
            d2[:, k] = (diff * diff).sum(axis=1)
        return d2

    def memberships(d2_raw: np.ndarray) -> np.ndarray:
        # sparsity-comparable distances; the row-constant scale cancels in
        # the membership ratios but is what rows are compared with
        d2 = d2_raw * scale[:, None]
        u = np.empty((n_rows, n_clusters))
        zero = d2 < 1e-12
        with np.errstate(divide="ignore"):
            w = d2 ** (-exponent)
        for i in range(n_rows):
            if shared[i] == 0:
                u[i] = 1.0 / n_clusters
            elif zero[i].any():
                u[i] = zero[i] / zero[i].sum()
            else:
                u[i] = w[i] / w[i].sum()
        return u

    def objective(u: np.ndarray, d2_raw: np.ndarray) -> float:
        # unscaled partial distances: the membership/centroid alternation is
        # exact coordinate descent on this, so it decreases monotonically
        return float(((u**fuzzifier) * d2_raw).sum())

    d2_raw = raw_distances(centroids)
    u = memberships(d2_raw)
    initial = objective(u, d2_raw)
    prev = initial
    iterations = 0
    for _ in range(max_iters):
        prev_state = (u.copy(), centroids.copy())
        weights = u**fuzzifier
        num = weights.T @ X
        den = weights.T @ mask
        centroids = np.where(den > 0, num / np.maximum(den, 1e-300), centroids)
        d2_raw = raw_distances(centroids)
        u = memberships(d2_raw)
        loss = objective(u, d2_raw)
        iterations += 1
        if not np.isfinite(loss):
            raise DivergenceError(f"fkm: non-finite loss at iteration {iterations}")
        if loss > prev:
            # floating-point pathology only; keep the last descending state
            u, centroids = prev_state
            loss = prev
            break
        rel = abs(prev - loss) / max(abs(prev), 1e-12)
        prev = loss
        if rel < tol:
            break

    report = FitReport(iterations, initial, prev, time.perf_counter() - t0)
    return FuzzyFit(u, centroids, report)


def complete_fkm(masked: PerformanceMatrix, setting: EngineSetting) -> CompletedMatrix:
    """Predict missing cells as membership-weighted combinations of centroids."""
    t0 = time.perf_counter()
    fit = fkm_fit(masked, setting)
    values, mask = masked.to_dense()
    predictions = fit.memberships @ fit.centroids
    report = fit.report
    return _finish(
        masked,
        values,
        mask,
        predictions,
        report.iterations_run,
        report.initial_loss,
        report.final_loss,
        t0,
    )


# --------------------------------------------------------------------------
# latent + decoder family (nlpca, ubp)
# --------------------------------------------------------------------------

def _sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def _latent_dims(n_cols: int, latent_dim: int, hidden_layers: Sequence[int]) -> list[int]:
    return [int(latent_dim), *[int(h) for h in hidden_layers], int(n_cols)]


def latent_param_count(
    n_rows: int, n_cols: int, latent_dim: int, hidden_layers: Sequence[int]
) -> int:
    dims = _latent_dims(n_cols, latent_dim, hidden_layers)
    total = n_rows * dims[0]
    for din, dout in zip(dims[:-1], dims[1:]):
        total += din * dout + dout
    return total


def _latent_unpack(flat, n_rows, n_cols, latent_dim, hidden_layers):
    dims = _latent_dims(n_cols, latent_dim, hidden_layers)
    pos = n_rows * dims[0]
    Z = flat[:pos].reshape(n_rows, dims[0])
    Ws, bs = [], []
    for din, dout in zip(dims[:-1], dims[1:]):
        Ws.append(flat[pos : pos + din * dout].reshape(din, dout))
        pos += din * dout
        bs.append(flat[pos : pos + dout])
        pos += dout
    return Z, Ws, bs


def _latent_pack(Z, Ws, bs) -> np.ndarray:
    parts = [Z.ravel()]
    for W, b in zip(Ws, bs):
        parts.append(W.ravel())
        parts.append(b)
    return np.concatenate(parts)


def _latent_forward(Z, Ws, bs):
    """Activations per layer; final entry is the [0,100]-scaled prediction."""
    acts = [Z]
    h = Z
    for W, b in zip(Ws[:-1], bs[:-1]):
        h = np.tanh(h @ W + b)
        acts.append(h)
    s = _sigmoid(h @ Ws[-1] + bs[-1])
    return acts, 100.0 * s, s


def _latent_loss(values, mask, Z, Ws, bs, reg) -> float:
    _, P, _ = _latent_forward(Z, Ws, bs)
    N = mask.sum()
    diff = (P - np.where(mask, values, 0.0)) * mask
    penalty = reg * (sum(float((W * W).sum()) for W in Ws) + float((Z * Z).sum()))
    return float((diff * diff).sum() / N + penalty)


def _latent_loss_grad(values, mask, Z, Ws, bs, reg):
    acts, P, s = _latent_forward(Z, Ws, bs)
    N = mask.sum()
    diff = (P - np.where(mask, values, 0.0)) * mask
    penalty = reg * (sum(float((W * W).sum()) for W in Ws) + float((Z * Z).sum()))
    loss = float((diff * diff).sum() / N + penalty)

    delta = (2.0 / N) * diff * (100.0 * s * (1.0 - s))
    gWs = [None] * len(Ws)
    gbs = [None] * len(bs)
    for layer in range(len(Ws) - 1, -1, -1):
        gWs[layer] = acts[layer].T @ delta + 2.0 * reg * Ws[layer]
        gbs[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ Ws[layer].T) * (1.0 - acts[layer] ** 2)
        else:
            delta = delta @ Ws[layer].T
    gZ = delta + 2.0 * reg * Z
    return loss, gZ, gWs, gbs


def latent_loss_and_grad(
    values: np.ndarray,
    mask: np.ndarray,
    flat: np.ndarray,
    latent_dim: int,
    hidden_layers: Sequence[int],
    regularization: float,
) -> tuple[float, np.ndarray]:
    """Observed-cell loss and analytic gradient for the latent-decoder model.

    ``flat`` packs the per-row latents followed by each layer's weights and
    biases.  Loss is mean squared error over observed cells plus L2 on
    weights and latents (biases unpenalized).
    """
    n_rows, n_cols = mask.shape
    flat = np.asarray(flat, dtype=float)
    Z, Ws, bs = _latent_unpack(flat, n_rows, n_cols, latent_dim, hidden_layers)
    loss, gZ, gWs, gbs = _latent_loss_grad(values, mask, Z, Ws, bs, regularization)
    return loss, _latent_pack(gZ, gWs, gbs)


def _train_latent_decoder(
    masked: PerformanceMatrix,
    setting: EngineSetting,
    hidden_layers: Sequence[int],
) -> CompletedMatrix:
    hp = _resolve(setting, _LATENT_DEFAULTS)
    latent_dim = int(hp["latent_dim"])
    lr0 = float(hp["learning_rate"])
    reg = float(hp["regularization"])
    max_epochs = int(hp["max_epochs"])
    tol = float(hp["tolerance"])
    if latent_dim < 1:
        raise ValueError("latent_dim must be a positive integer")
    if lr0 <= 0 or reg <= 0:
        raise ValueError("learning_rate and regularization must be > 0")

    t0 = time.perf_counter()
    values, mask = masked.to_dense()
    _require_observed(mask)
    n_rows, n_cols = mask.shape
    dims = _latent_dims(n_cols, latent_dim, hidden_layers)

    rng = np.random.default_rng(normalize_seed(setting.seed))
    Z = rng.uniform(-0.1, 0.1, (n_rows, dims[0]))
    Ws = [
        rng.uniform(-0.1, 0.1, (din, dout))
        for din, dout in zip(dims[:-1], dims[1:])
    ]
    bs = [np.zeros(dout) for dout in dims[1:]]
    # start the output bias at the observed column means so predictions open
    # at the column-mean baseline rather than a flat 50
    col_means, _ = _column_fill(values, mask)
    frac = np.clip(col_means / 100.0, 0.02, 0.98)
    bs[-1] = np.log(frac / (1.0 - frac))

    if hidden_layers:
        quarter = max(1, max_epochs // 4)
        phases = [
            ("latents", quarter),
            ("decoder", quarter),
            ("joint", max(1, max_epochs - 2 * quarter)),
        ]
    else:
        phases = [("joint", max_epochs)]

    initial = _latent_loss(values, mask, Z, Ws, bs, reg)
    if not np.isfinite(initial):
        raise DivergenceError("latent decoder: non-finite loss at epoch 0")
    prev = initial
    total_epochs = 0

    for phase, budget in phases:
        lr = lr0
        halvings = 0
        vZ = np.zeros_like(Z)
        vWs = [np.zeros_like(W) for W in Ws]
        vbs = [np.zeros_like(b) for b in bs]
        done = 0
        while done < budget:
            snapshot = (Z.copy(), [W.copy() for W in Ws], [b.copy() for b in bs])
            loss_here, gZ, gWs, gbs = _latent_loss_grad(values, mask, Z, Ws, bs, reg)
            if phase in ("latents", "joint"):
                vZ = _MOMENTUM * vZ + gZ
                Z -= lr * vZ
            if phase in ("decoder", "joint"):
                for idx in range(len(Ws)):
                    vWs[idx] = _MOMENTUM * vWs[idx] + gWs[idx]
                    Ws[idx] -= lr * vWs[idx]
                    vbs[idx] = _MOMENTUM * vbs[idx] + gbs[idx]
                    bs[idx] -= lr * vbs[idx]
            loss = _latent_loss(values, mask, Z, Ws, bs, reg)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"latent decoder: non-finite loss at epoch {total_epochs + 1}"
                )
            if loss > prev:
                Z, Ws, bs = snapshot
                vZ = np.zeros_like(Z)
                vWs = [np.zeros_like(W) for W in Ws]
                vbs = [np.zeros_like(b) for b in bs]
                halvings += 1
                if halvings > _MAX_HALVINGS:
                    break
                lr *= 0.5
                continue
            done += 1
            total_epochs += 1
            improvement = (prev - loss) / max(abs(prev), 1e-12)
            prev = loss
            if improvement < tol:
                break

    _, predictions, _ = _latent_forward(Z, Ws, bs)
    return _finish(masked, values, mask, predictions, total_epochs, initial, prev, t0)


def complete_nlpca(masked: PerformanceMatrix, setting: EngineSetting) -> CompletedMatrix:
    """Free per-row latents with a jointly trained affine-sigmoid decoder."""
    if setting.engine != "nlpca":
        raise ValueError(f"expected an nlpca setting, got {setting.engine}")
    return _train_latent_decoder(masked, setting, hidden_layers=[])


def complete_ubp(masked: PerformanceMatrix, setting: EngineSetting) -> CompletedMatrix:
    """Latent + MLP decoder trained in three phases: latents, decoder, joint."""
    if setting.engine != "ubp":
        raise ValueError(f"expected a ubp setting, got {setting.engine}")
    hidden = setting.hyperparams.get("hidden_layers", [8])
    if not hidden:
        raise ValueError("ubp requires at least one hidden layer")
    return _train_latent_decoder(masked, setting, hidden_layers=list(hidden))


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def complete(masked: PerformanceMatrix, setting: EngineSetting) -> CompletedMatrix:
    """Run the engine named in ``setting`` on a masked matrix."""
    if setting.engine == "baseline":
        return complete_baseline(masked)
    if setting.engine == "mf":
        return complete_mf(masked, setting)
    if setting.engine == "fkm":
        return complete_fkm(masked, setting)
    if setting.engine == "nlpca":
        return complete_nlpca(masked, setting)
    if setting.engine == "ubp":
        return complete_ubp(masked, setting)
    raise ValueError(
        f"unknown engine {setting.engine!r}; valid engines: " + ", ".join(ENGINE_NAMES)
    )


def default_engine_grid(seed: int = 0) -> tuple[EngineSetting, ...]:
    """The stock hyperparameter grid the evaluation sweep ranges over."""
    settings = [EngineSetting("baseline", {}, seed)]
    settings += [EngineSetting("mf", {"rank": r}, seed) for r in (2, 4, 8, 16)]
    settings += [
        EngineSetting("fkm", {"cluster_count": c, "fuzzifier": 2.0}, seed)
        for c in (2, 4, 8)
    ]
    settings += [EngineSetting("nlpca", {"latent_dim": d}, seed) for d in (2, 4, 8)]
    settings += [
        EngineSetting("ubp", {"latent_dim": d, "hidden_layers": [8]}, seed)
        for d in (2, 4, 8)
    ]
    return tuple(settings)
