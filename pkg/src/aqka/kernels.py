"""Ground-truth kernels and labeled datasets.

Provides RBF kernels, exact statevector fidelity kernels for small-qubit ZZ
feature maps, planted-sparse regression targets whose ridge solution is
exactly sparse, Haar-unitary ad-hoc labels, and CSV dataset ingestion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDataset, InvalidInput, ParseError
from .numerics import solve_spd, symmetrize

MAX_QUBITS = 12  # statevector dimension capped at 2^12 = 4096


@dataclass
class FeatureMapConfig:
    """ZZ feature map shape: qubit count, repetition depth, entanglement.

    Angles follow the standard convention: single-qubit phases 2*x_i and
    pairwise phases 2*(pi - x_i)*(pi - x_j) on linearly entangled neighbors.
    Inputs are expected in a bounded range, nominally [0, 2*pi];
    ``input_scale`` rescales features before encoding (1.0 = no rescale).
    """

    n_qubits: int
    depth: int = 2
    entanglement: str = "linear"
    input_scale: float = 1.0

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise InvalidInput(f"n_qubits must be in [1, {MAX_QUBITS}]")
        if self.depth < 1:
            raise InvalidInput("depth must be >= 1")
        if self.entanglement != "linear":
            raise InvalidInput("only linear entanglement is supported")


@dataclass
class Dataset:
    """Feature matrix with labels and optional planted-sparse structure."""

    X: np.ndarray
    y: np.ndarray
    anchors: np.ndarray | None = None
    coeffs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.shape[0] != self.y.shape[0]:
            raise InvalidInput("X and y row counts differ")
        if not np.all(np.isfinite(self.y)):
            raise InvalidInput("labels must be finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]


def rbf_kernel(x: np.ndarray, gamma: float, xb: np.ndarray | None = None) -> np.ndarray:
    """Gaussian kernel exp(-gamma * ||x_i - x_j||^2).

    With ``xb`` given, returns the cross kernel between rows of ``x`` and
    rows of ``xb``; otherwise the square kernel of ``x`` with an exactly
    symmetric matrix and unit diagonal.
    """
    if gamma <= 0:
        raise InvalidInput("gamma must be > 0")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInput("features must be finite")
    square = xb is None
    xb_arr = x if square else np.asarray(xb, dtype=float)
    sq_a = np.sum(x * x, axis=1)
    sq_b = np.sum(xb_arr * xb_arr, axis=1)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (x @ xb_arr.T)
    np.maximum(d2, 0.0, out=d2)
    k = np.exp(-gamma * d2)
    if square:
        k = symmetrize(k)
        np.fill_diagonal(k, 1.0)
    return np.clip(k, 0.0, 1.0)


def _hadamard_all(states: np.ndarray, n_qubits: int) -> np.ndarray:
    """Apply H on every qubit of a batch of statevectors (rows)."""
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    n_rows = states.shape[0]
    for t in range(n_qubits):
        shaped = states.reshape(n_rows, -1, 2, 1 << t)
        a = shaped[:, :, 0, :].copy()
        b = shaped[:, :, 1, :]
        shaped[:, :, 0, :] = (a + b) * inv_sqrt2
        shaped[:, :, 1, :] = (a - b) * inv_sqrt2
    return states


def zz_feature_states(x: np.ndarray, cfg: FeatureMapConfig) -> np.ndarray:
    """Exact statevectors U(x)|0...0> for each feature row, shape (rows, 2^q).

    Each repetition applies a Hadamard layer, single-qubit phases 2*x_t, and
    odd-parity phases 2*(pi - x_s)(pi - x_t) on linear neighbor pairs (the
    CX-P-CX compilation of the ZZ interaction is diagonal, so only the parity
    bit matters).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != cfg.n_qubits:
        raise InvalidInput(
            f"feature dimension {x.shape[1] if x.ndim == 2 else '?'} "
            f"does not match n_qubits={cfg.n_qubits}"
        )
    if cfg.input_scale != 1.0:
        x = x * cfg.input_scale
    q = cfg.n_qubits
    dim = 1 << q
    idx = np.arange(dim)
    bit = np.stack([(idx >> t) & 1 for t in range(q)])  # (q, dim)

    states = np.zeros((x.shape[0], dim), dtype=complex)
    states[:, 0] = 1.0
    for _ in range(cfg.depth):
        _hadamard_all(states, q)
        single = 2.0 * x @ bit  # (rows, dim) accumulated single-qubit angles
        phase = single
        for t in range(q - 1):
            parity = bit[t] ^ bit[t + 1]
            ang = 2.0 * (np.pi - x[:, t]) * (np.pi - x[:, t + 1])
            phase = phase + ang[:, None] * parity[None, :]
        states *= np.exp(1j * phase)
    return states


def zz_fidelity_kernel(
    xa: np.ndarray, xb: np.ndarray | None, cfg: FeatureMapConfig
) -> np.ndarray:
    """Fidelity kernel |<0|U(x_j)^dag U(x_i)|0>|^2 by exact statevector overlap.

    ``xb=None`` (or ``xb is xa``) computes the square train kernel with unit
    diagonal pinned exactly.
    """
    square = xb is None or xb is xa
    states_a = zz_feature_states(xa, cfg)
    states_b = states_a if square else zz_feature_states(xb, cfg)
    overlap = states_a @ states_b.conj().T
    k = np.abs(overlap) ** 2
    if square:
        k = symmetrize(k)
        np.fill_diagonal(k, 1.0)
    return np.clip(k, 0.0, 1.0)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian with phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    z /= np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


class PlantedTarget:
    """Planted-sparse regression target y = (K + ridge*I) c.

    The noiseless ridge solution recovers ``coeffs`` exactly, so the model
    coefficients are sparse on ``anchors`` by construction. Classification
    labels for evaluation come from :func:`planted_labels`.
    """

    __slots__ = ("y", "coeffs", "anchors")

    def __init__(self, y: np.ndarray, coeffs: np.ndarray, anchors: np.ndarray):
        self.y = y
        self.coeffs = coeffs
        self.anchors = anchors


def planted_sparse_target(
    k: np.ndarray, m: int, ridge: float, rng: np.random.Generator
) -> PlantedTarget:
    """Draw m anchor indices, standard-normal coefficients, y = (K + ridge*I) c."""
    k = np.asarray(k, dtype=float)
    n = k.shape[0]
    if not 1 <= m <= n:
        raise InvalidInput(f"anchor count m={m} must lie in [1, {n}]")
    if ridge <= 0:
        raise InvalidInput("ridge must be > 0")
    anchors = np.sort(rng.choice(n, size=m, replace=False))
    coeffs = np.zeros(n)
    coeffs[anchors] = rng.standard_normal(m)
    y = k @ coeffs + ridge * coeffs
    return PlantedTarget(y=y, coeffs=coeffs, anchors=anchors)


def planted_labels(k_cross: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Binarized oracle predictions sign(K_cross @ c), with sign(0) -> +1."""
    raw = np.asarray(k_cross) @ coeffs
    return np.where(raw >= 0, 1.0, -1.0)


def haar_adhoc_labels(
    x: np.ndarray,
    cfg: FeatureMapConfig,
    margin_frac: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Labels sign(|<0|V U(x)|0>|^2 - tau) for a Haar-random V.

    tau is the empirical median of the labeling probability over the sample,
    so classes are balanced regardless of V. Points with margin below
    ``margin_frac`` times the probability spread are dropped; returns
    (labels, kept_indices).
    """
    if margin_frac < 0:
        raise InvalidInput("margin_frac must be >= 0")
    states = zz_feature_states(x, cfg)
    v = haar_unitary(1 << cfg.n_qubits, rng)
    prob = np.abs(states @ v[0]) ** 2
    tau = float(np.median(prob))
    labels = np.where(prob - tau >= 0, 1.0, -1.0)
    spread = float(np.std(prob))
    kept = np.nonzero(np.abs(prob - tau) >= margin_frac * spread)[0]
    if kept.size == 0:
        raise EmptyDataset("margin filter removed every point")
    return labels[kept], kept


def standardized_gaussian_features(
    n: int, d: int, rng: np.random.Generator
) -> np.ndarray:
    """N(0, I_d) draws rescaled to exactly unit variance per coordinate."""
    x = rng.standard_normal((n, d))
    x -= x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0] = 1.0
    return x / std


def save_dataset_csv(path, x: np.ndarray, y: np.ndarray) -> None:
    """Write a dataset as ``f0,...,f{d-1},label`` rows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(x.shape[1])] + ["label"])
        for row, label in zip(x, y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(label))])


def load_dataset_csv(path) -> Dataset:
    """Read a ``f0,...,f{d-1},label`` CSV; labels map to {-1, +1}.

    Accepts labels in {0, 1} or {-1, +1}; anything else raises InvalidInput.
    Malformed rows raise ParseError with the 1-based line number.
    """
    rows = []
    raw_labels = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[-1] != "label":
            raise ParseError(f"bad dataset header {header!r}", line=1)
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(
                    f"expected {width} columns, got {len(row)}", line=lineno
                )
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(f"non-numeric field in {row!r}", line=lineno) from exc
            rows.append(values[:-1])
            raw_labels.append(values[-1])
    if not rows:
        raise ParseError("dataset has no data rows")
    x = np.asarray(rows, dtype=float)
    raw = np.asarray(raw_labels, dtype=float)
    classes = set(np.unique(raw).tolist())
    if classes <= {0.0, 1.0}:
        y = np.where(raw > 0, 1.0, -1.0)
    elif classes <= {-1.0, 1.0}:
        y = raw.copy()
    else:
        raise InvalidInput(f"labels must be binary, got values {sorted(classes)}")
    return Dataset(X=x, y=y)


def check_kernel_matrix(k: np.ndarray, atol: float = 1e-12) -> None:
    """Assert the generated-kernel contract: symmetric, unit diagonal, [0, 1]."""
    k = np.asarray(k)
    if not np.array_equal(k, k.T):
        raise InvalidInput("kernel matrix is not exactly symmetric")
    if np.any(np.abs(np.diag(k) - 1.0) > atol):
        raise InvalidInput("kernel diagonal is not 1")
    if np.any(k < -atol) or np.any(k > 1.0 + atol):
        raise InvalidInput("kernel entries fall outside [0, 1]")


def verify_planted_recovery(
    k: np.ndarray, target: PlantedTarget, ridge: float, rtol: float = 1e-8
) -> bool:
    """Check that the noiseless ridge solve returns the planted coefficients."""
    alpha = solve_spd(k, target.y, ridge)
    return bool(
        np.linalg.norm(alpha - target.coeffs)
        <= rtol * max(np.linalg.norm(target.coeffs), 1e-30)
    )
