"""Descriptor classification: one-vs-rest polynomial-kernel C-SVM plus k-NN.

The SVM solves each binary subproblem with a simplified sequential
minimal optimization loop over the shared Gram matrix. Training examples
are put into a canonical order (by label, then descriptor bytes) before
optimization, so the model does not depend on dataset ordering, and the
partner index of each optimization step comes from a seeded generator, so
training is deterministic.

k-NN over raw descriptors is intentionally plain; it exists as a sanity
baseline, not a competitive classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SvmConfig:
    """Hyperparameters for the polynomial-kernel C-SVM.

    gamma == None resolves to 1/descriptor_length at training time.
    max_passes bounds how many consecutive sweeps may make no progress
    before the optimizer stops.
    """

    C: float = 1.0
    degree: int = 3
    gamma: float | None = None
    coef0: float = 1.0
    tol: float = 1e-3
    max_passes: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_passes < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass(frozen=True)
class BinarySvm:
    """One one-vs-rest machine: its class label, bias and support set."""

    label: str
    bias: float
    coefficients: np.ndarray
    support_vectors: np.ndarray


@dataclass(frozen=True)
class SvmModel:
    """Trained multi-class model; labels sorted, one machine per label."""

    labels: tuple[str, ...]
    machines: tuple[BinarySvm, ...]
    config: SvmConfig
    n_features: int


def kernel_matrix(u: np.ndarray, v: np.ndarray, config: SvmConfig) -> np.ndarray:
    """Polynomial kernel (gamma * <u, v> + coef0) ** degree, rowwise."""
    return (config.gamma * (u @ v.T) + config.coef0) ** config.degree


def train(descriptors, labels, config: SvmConfig = SvmConfig()) -> SvmModel:
    """Fit one binary C-SVM per label (one-vs-rest).

    Deterministic for a fixed seed regardless of example order. Requires
    at least two distinct labels.
    """
    x = _as_matrix(descriptors)
    names = [str(lab) for lab in labels]
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(names) != x.shape[0]:
        raise ValueError("descriptor and label counts differ")
    table = tuple(sorted(set(names)))
    if len(table) < 2:
        raise ValueError("training requires at least 2 classes")

    if config.gamma is None:
        config = replace(config, gamma=1.0 / x.shape[1])

    label_pos = {lab: k for k, lab in enumerate(table)}
    order = sorted(range(x.shape[0]), key=lambda n: (label_pos[names[n]], x[n].tobytes()))
    x = x[order]
    names = [names[n] for n in order]

    gram = kernel_matrix(x, x, config)
    machines = []
    for class_index, lab in enumerate(table):
        y = np.where(np.array(names) == lab, 1.0, -1.0)
        rng = np.random.default_rng([config.seed, class_index])
        alpha, bias = _smo(gram, y, config.C, config.tol, config.max_passes, rng)
        sv = alpha > 0
        machines.append(
            BinarySvm(
                label=lab,
                bias=float(bias),
                coefficients=alpha[sv] * y[sv],
                support_vectors=x[sv].copy(),
            )
        )
    return SvmModel(labels=table, machines=tuple(machines), config=config,
                    n_features=x.shape[1])


def decision_values(model: SvmModel, descriptor) -> np.ndarray:
    """Per-class decision value, in model.labels order."""
    q = _as_vector(descriptor)
    if q.size != model.n_features:
        raise ValueError(
            f"descriptor length {q.size} does not match model's {model.n_features}"
        )
    out = np.empty(len(model.machines), dtype=np.float64)
    for k, machine in enumerate(model.machines):
        if machine.support_vectors.shape[0]:
            kernel = (model.config.gamma * (machine.support_vectors @ q)
                      + model.config.coef0) ** model.config.degree
            out[k] = machine.coefficients @ kernel + machine.bias
        else:
            out[k] = machine.bias
    return out


def predict(model: SvmModel, descriptor) -> str:
    """Label with the highest decision value; ties take the smallest label."""
    return model.labels[int(np.argmax(decision_values(model, descriptor)))]


def knn_predict(descriptors, labels, query, k: int) -> str:
    """Majority label among the k nearest training descriptors.

    Distance ties resolve by training order (stable sort); vote ties take
    the smallest label.
    """
    x = _as_matrix(descriptors)
    names = [str(lab) for lab in labels]
    if x.shape[0] == 0:
        raise ValueError("cannot classify with an empty training set")
    if len(names) != x.shape[0]:
        raise ValueError("descriptor and label counts differ")
    if not 1 <= k <= x.shape[0]:
        raise ValueError(f"k must lie in 1..{x.shape[0]}, got {k}")
    q = _as_vector(query)
    diff = x - q
    d2 = (diff * diff).sum(axis=1)
    nearest = np.argsort(d2, kind="stable")[:k]
    counts: dict[str, int] = {}
    for n in nearest:
        counts[names[n]] = counts.get(names[n], 0) + 1
    best = max(counts.values())
    return min(lab for lab, c in counts.items() if c == best)


def save_model(model: SvmModel, path):
    """Write the model as text; floats at repr precision so a reloaded
    model reproduces predictions bitwise. Labels must not contain commas
    or newlines."""
    cfg = model.config
    lines = ["SDPFSVM1"]
    lines.append(",".join([
        repr(float(cfg.C)), str(cfg.degree), repr(float(cfg.gamma)),
        repr(float(cfg.coef0)), repr(float(cfg.tol)), str(cfg.max_passes),
        str(cfg.seed), str(model.n_features),
    ]))
    for machine in model.machines:
        if "," in machine.label or "\n" in machine.label:
            raise ValueError(f"label {machine.label!r} cannot be serialized")
        lines.append(f"{machine.label},{float(machine.bias)!r},{machine.coefficients.size}")
        for coef, vec in zip(machine.coefficients, machine.support_vectors):
            lines.append(",".join([repr(float(coef))] + [repr(float(v)) for v in vec]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> SvmModel:
    with open(path, encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != "SDPFSVM1":
        raise ValueError(f"{path}: not a model file (missing SDPFSVM1 header)")
    fields = lines[1].split(",")
    if len(fields) != 8:
        raise ValueError(f"{path}: malformed config line")
    config = SvmConfig(
        C=float(fields[0]), degree=int(fields[1]), gamma=float(fields[2]),
        coef0=float(fields[3]), tol=float(fields[4]), max_passes=int(fields[5]),
        seed=int(fields[6]),
    )
    n_features = int(fields[7])
    machines = []
    row = 2
    while row < len(lines):
        if not lines[row]:
            row += 1
            continue
        head = lines[row].split(",")
        if len(head) != 3:
            raise ValueError(f"{path}: malformed class block at line {row + 1}")
        label, bias, nsv = head[0], float(head[1]), int(head[2])
        coefs = np.empty(nsv, dtype=np.float64)
        vectors = np.empty((nsv, n_features), dtype=np.float64)
        for n in range(nsv):
            parts = lines[row + 1 + n].split(",")
            if len(parts) != 1 + n_features:
                raise ValueError(f"{path}: malformed support vector at line {row + n + 2}")
            coefs[n] = float(parts[0])
            vectors[n] = [float(p) for p in parts[1:]]
        machines.append(BinarySvm(label=label, bias=bias, coefficients=coefs,
                                  support_vectors=vectors))
        row += 1 + nsv
    if len(machines) < 2:
        raise ValueError(f"{path}: model must hold at least 2 classes")
    return SvmModel(
        labels=tuple(m.label for m in machines), machines=tuple(machines),
        config=config, n_features=n_features,
    )


def _as_vector(descriptor) -> np.ndarray:
    vec = np.asarray(getattr(descriptor, "values", descriptor), dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"expected a flat descriptor, got shape {vec.shape}")
    return vec


def _as_matrix(descriptors) -> np.ndarray:
    rows = [_as_vector(d) for d in descriptors]
    if not rows:
        return np.empty((0, 0), dtype=np.float64)
    return np.vstack(rows)


def _smo(gram, y, c, tol, max_passes, rng):
    """Simplified sequential minimal optimization of the dual problem.

    Sweeps all examples; for each KKT violator picks a random partner and
    solves the two-variable subproblem analytically. Stops after
    max_passes consecutive sweeps without progress.
    """
    n = y.size
    alpha = np.zeros(n, dtype=np.float64)
    bias = 0.0
    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            err_i = (alpha * y) @ gram[:, i] + bias - y[i]
            if not ((y[i] * err_i < -tol and alpha[i] < c)
                    or (y[i] * err_i > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            err_j = (alpha * y) @ gram[:, j] + bias - y[j]
            alpha_i, alpha_j = alpha[i], alpha[j]
            if y[i] != y[j]:
                low = max(0.0, alpha_j - alpha_i)
                high = min(c, c + alpha_j - alpha_i)
            else:
                low = max(0.0, alpha_i + alpha_j - c)
                high = min(c, alpha_i + alpha_j)
            if low == high:
                continue
            eta = 2.0 * gram[i, j] - gram[i, i] - gram[j, j]
            if eta >= 0:
                continue
            new_j = alpha_j - y[j] * (err_i - err_j) / eta
            new_j = min(high, max(low, new_j))
            if abs(new_j - alpha_j) < 1e-5:
                continue
            new_i = alpha_i + y[i] * y[j] * (alpha_j - new_j)
            new_i = min(c, max(0.0, new_i))
            b1 = (bias - err_i - y[i] * (new_i - alpha_i) * gram[i, i]
                  - y[j] * (new_j - alpha_j) * gram[i, j])
            b2 = (bias - err_j - y[i] * (new_i - alpha_i) * gram[i, j]
                  - y[j] * (new_j - alpha_j) * gram[j, j])
            alpha[i], alpha[j] = new_i, new_j
            if 0.0 < new_i < c:
                bias = b1
            elif 0.0 < new_j < c:
                bias = b2
            else:
                bias = 0.5 * (b1 + b2)
            changed += 1
        passes = passes + 1 if changed == 0 else 0
    return alpha, bias
