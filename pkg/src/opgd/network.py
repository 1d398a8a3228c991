"""Core network family: a linear combination of fully connected sigmoid subnetworks.

The model is a sum of ``n_subnets`` independent fully connected networks with
``depth`` hidden layers of ``width`` neurons each, all using the logistic
activation.  Only the top-level combination coefficients ("outer" weights)
enter linearly; everything inside a subnetwork is "inner".

Weight blocks per subnetwork (bias is always column 0):

* ``layer0``  : width x (input_dim + 1), input to first hidden layer
* ``hidden``  : (depth - 2) blocks of width x (width + 1)
* ``top``     : 1 x (width + 1), last hidden layer to the subnetwork output
* ``outer``   : one scalar combination coefficient per subnetwork

Storage is dense, subnetwork-major then layer-major; see ``flat_index``.
All arrays are float64 and all operations are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Architecture",
    "WeightVector",
    "GradientVector",
    "Dataset",
    "Estimator",
    "weight_count",
    "sigmoid",
    "forward",
    "hidden_outputs",
    "subnet_outputs",
    "truncate",
    "empirical_risk",
    "predict",
    "flat_index",
]

# Chunk bound for batched evaluation: keeps per-chunk temporaries around 16 MB
# so the allocator reuses heap blocks instead of thrashing mmap.
_CHUNK_ELEMS = 2_500_000


@dataclass(frozen=True)
class Architecture:
    """Shape of the combined network.

    ``depth`` counts hidden layers and must be at least 2; ``width`` must be
    at least twice ``input_dim`` (the regime every bound here assumes).
    """

    input_dim: int
    depth: int
    width: int
    n_subnets: int

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.depth < 2:
            raise ValueError("depth must be >= 2")
        if self.width < 2 * self.input_dim:
            raise ValueError("width must be >= 2 * input_dim")
        if self.n_subnets < 1:
            raise ValueError("n_subnets must be >= 1")

    @property
    def params_per_subnet(self) -> int:
        d, L, r = self.input_dim, self.depth, self.width
        return 1 + (r + 1) + (L - 2) * r * (r + 1) + r * (d + 1)


def weight_count(arch: Architecture) -> int:
    """Total number of scalar weights, including the outer coefficients."""
    return arch.n_subnets * arch.params_per_subnet


@dataclass
class WeightVector:
    """All weights of one combined network.

    ``hidden`` always has shape (n_subnets, depth - 2, width, width + 1); it
    is empty along axis 1 when depth == 2.
    """

    outer: np.ndarray
    layer0: np.ndarray
    hidden: np.ndarray
    top: np.ndarray

    @staticmethod
    def zeros(arch: Architecture) -> "WeightVector":
        d, L, r, K = arch.input_dim, arch.depth, arch.width, arch.n_subnets
        return WeightVector(
            outer=np.zeros(K),
            layer0=np.zeros((K, r, d + 1)),
            hidden=np.zeros((K, L - 2, r, r + 1)),
            top=np.zeros((K, r + 1)),
        )

    def copy(self) -> "WeightVector":
        return WeightVector(
            self.outer.copy(), self.layer0.copy(), self.hidden.copy(), self.top.copy()
        )

    @property
    def n_params(self) -> int:
        return self.outer.size + self.layer0.size + self.hidden.size + self.top.size

    def validate(self, arch: Architecture) -> None:
        d, L, r, K = arch.input_dim, arch.depth, arch.width, arch.n_subnets
        if self.outer.shape != (K,):
            raise ValueError("outer block has wrong shape")
        if self.layer0.shape != (K, r, d + 1):
            raise ValueError("layer0 block has wrong shape")
        if self.hidden.shape != (K, L - 2, r, r + 1):
            raise ValueError("hidden block has wrong shape")
        if self.top.shape != (K, r + 1):
            raise ValueError("top block has wrong shape")
        for block in (self.outer, self.layer0, self.hidden, self.top):
            if not np.all(np.isfinite(block)):
                raise ValueError("weights must be finite")

    def to_flat(self) -> np.ndarray:
        """Flatten subnetwork-major, layer-major, row-major; outer last per subnet."""
        K = self.outer.size
        parts = [
            self.layer0.reshape(K, -1),
            self.hidden.reshape(K, -1),
            self.top.reshape(K, -1),
            self.outer.reshape(K, 1),
        ]
        return np.concatenate(parts, axis=1).ravel()

    @staticmethod
    def from_flat(arch: Architecture, flat: np.ndarray) -> "WeightVector":
        d, L, r, K = arch.input_dim, arch.depth, arch.width, arch.n_subnets
        per = arch.params_per_subnet
        if flat.size != K * per:
            raise ValueError("flat vector has wrong length")
        rows = np.asarray(flat, dtype=float).reshape(K, per)
        n0 = r * (d + 1)
        nh = (L - 2) * r * (r + 1)
        nt = r + 1
        return WeightVector(
            outer=rows[:, n0 + nh + nt].copy(),
            layer0=rows[:, :n0].reshape(K, r, d + 1).copy(),
            hidden=rows[:, n0 : n0 + nh].reshape(K, L - 2, r, r + 1).copy(),
            top=rows[:, n0 + nh : n0 + nh + nt].copy(),
        )

    def axpy_(self, alpha: float, other: "WeightVector") -> None:
        """In-place self += alpha * other (used by the descent loop)."""
        self.outer += alpha * other.outer
        self.layer0 += alpha * other.layer0
        self.hidden += alpha * other.hidden
        self.top += alpha * other.top

    def sq_norm(self) -> float:
        s = 0.0
        for block in (self.outer, self.layer0, self.hidden, self.top):
            s += float(np.dot(block.ravel(), block.ravel()))
        return s

    def norm(self) -> float:
        return float(np.sqrt(self.sq_norm()))

    def inner_sq_distance(self, other: "WeightVector") -> float:
        """Squared Euclidean distance over all non-outer blocks."""
        s = 0.0
        for a, b in (
            (self.layer0, other.layer0),
            (self.hidden, other.hidden),
            (self.top, other.top),
        ):
            diff = (a - b).ravel()
            s += float(np.dot(diff, diff))
        return s

    def inner_distance(self, other: "WeightVector") -> float:
        return float(np.sqrt(self.inner_sq_distance(other)))

    def outer_sq_distance(self, other: "WeightVector") -> float:
        diff = self.outer - other.outer
        return float(np.dot(diff, diff))

    def outer_distance(self, other: "WeightVector") -> float:
        return float(np.sqrt(self.outer_sq_distance(other)))


# Gradients have exactly the weight layout, so they share the container.
GradientVector = WeightVector


def flat_index(arch: Architecture, k: int, layer: int, i: int, j: int) -> int:
    """Position of one weight in the flat order used by ``to_flat``.

    ``layer`` is the weight-layer index: 0 for the input block, 1..depth-2
    for hidden blocks, depth-1 for the top block, depth for the outer
    coefficient of subnetwork ``k`` (``i`` and ``j`` must then be 0).
    """
    d, L, r = arch.input_dim, arch.depth, arch.width
    if not 0 <= k < arch.n_subnets:
        raise IndexError("subnetwork index out of range")
    per = arch.params_per_subnet
    base = k * per
    n0 = r * (d + 1)
    nh = (L - 2) * r * (r + 1)
    if layer == 0:
        if not (0 <= i < r and 0 <= j <= d):
            raise IndexError("layer0 index out of range")
        return base + i * (d + 1) + j
    if 1 <= layer <= L - 2:
        if not (0 <= i < r and 0 <= j <= r):
            raise IndexError("hidden index out of range")
        return base + n0 + (layer - 1) * r * (r + 1) + i * (r + 1) + j
    if layer == L - 1:
        if not (i == 0 and 0 <= j <= r):
            raise IndexError("top index out of range")
        return base + n0 + nh + j
    if layer == L:
        if i != 0 or j != 0:
            raise IndexError("outer weight has no row/column indices")
        return base + n0 + nh + (r + 1)
    raise IndexError("layer index out of range")


@dataclass
class Dataset:
    """Paired observations; ``x`` is n x input_dim, ``y`` has length n."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x and y must have the same number of rows")
        if self.y.size < 1:
            raise ValueError("dataset must be nonempty")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset entries must be finite")

    @property
    def n(self) -> int:
        return self.y.size


@dataclass
class Estimator:
    """A trained network together with its truncation level."""

    arch: Architecture
    weights: WeightVector
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def _sigmoid_inplace(z: np.ndarray) -> np.ndarray:
    """Overwrite ``z`` with sigmoid(z); the exponential argument is never positive."""
    pos = z >= 0
    np.abs(z, out=z)
    np.negative(z, out=z)
    np.exp(z, out=z)  # e = exp(-|z0|)
    np.divide(z, 1.0 + z, out=z)  # e / (1 + e): sigmoid for z0 < 0
    np.subtract(1.0, z, out=z, where=pos)  # 1 - e / (1 + e): sigmoid for z0 >= 0
    return z


def sigmoid(z):
    """Logistic squasher 1 / (1 + exp(-z)).

    Evaluated in the two-branch form so the exponential argument is never
    positive; saturates to exactly 0.0 or 1.0 in float64 for |z| beyond
    roughly 745 (documented behaviour, not an error).
    """
    out = _sigmoid_inplace(np.array(z, dtype=float))
    if np.isscalar(z) or out.ndim == 0:
        return float(out)
    return out


def truncate(beta: float, z):
    """Clamp ``z`` to [-beta, beta]; idempotent."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if np.isscalar(z):
        return float(min(beta, max(-beta, z)))
    return np.clip(np.asarray(z, dtype=float), -beta, beta)


def _as_batch(arch: Architecture, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise ValueError(
            f"input has dimension {x.shape[-1]}, expected {arch.input_dim}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    return x, single


def _forward_chunk(arch: Architecture, w: WeightVector, x: np.ndarray, keep: bool):
    """Forward pass on one chunk; returns (f, activations, top_out).

    ``activations`` lists the per-layer outputs A^(1)..A^(depth-1), each of
    shape (n, n_subnets, width); ``top_out`` is A^(depth) of shape
    (n, n_subnets).  Both are None unless ``keep``.
    """
    d, L, r, K = arch.input_dim, arch.depth, arch.width, arch.n_subnets
    n = x.shape[0]
    z = x @ w.layer0[:, :, 1:].reshape(K * r, d).T
    z += w.layer0[:, :, 0].ravel()[None, :]
    a = _sigmoid_inplace(z).reshape(n, K, r)
    acts = [a] if keep else None
    for m in range(L - 2):
        z = np.einsum("nkj,kij->nki", a, w.hidden[:, m, :, 1:])
        z += w.hidden[:, m, :, 0][None, :, :]
        a = _sigmoid_inplace(z)
        if keep:
            acts.append(a)
    z_top = np.einsum("nkj,kj->nk", a, w.top[:, 1:])
    z_top += w.top[:, 0][None, :]
    a_top = _sigmoid_inplace(z_top)
    f = a_top @ w.outer
    return f, acts, (a_top if keep else None), a


def _chunk_size(arch: Architecture) -> int:
    per_sample = max(arch.n_subnets * arch.width, 1)
    return max(1, _CHUNK_ELEMS // per_sample)


def forward(arch: Architecture, w: WeightVector, x):
    """Network output; a float for a single input, an array row-wise otherwise."""
    xb, single = _as_batch(arch, x)
    step = _chunk_size(arch)
    out = np.empty(xb.shape[0])
    for lo in range(0, xb.shape[0], step):
        out[lo : lo + step] = _forward_chunk(arch, w, xb[lo : lo + step], False)[0]
    return float(out[0]) if single else out


def hidden_outputs(arch: Architecture, w: WeightVector, x) -> list[np.ndarray]:
    """All per-layer activations for one input.

    Returns [A1, ..., A_{depth-1}, A_top] where the first entries have shape
    (n_subnets, width) and the last is the per-subnetwork output of shape
    (n_subnets,).  Part of the public test surface.
    """
    xb, single = _as_batch(arch, x)
    if not single:
        raise ValueError("hidden_outputs takes a single input vector")
    _, acts, a_top, _ = _forward_chunk(arch, w, xb, True)
    return [a[0] for a in acts] + [a_top[0]]


def subnet_outputs(arch: Architecture, w: WeightVector, x) -> np.ndarray:
    """Per-subnetwork top activations A^(depth), shape (n, n_subnets)."""
    xb, _ = _as_batch(arch, x)
    step = _chunk_size(arch)
    out = np.empty((xb.shape[0], arch.n_subnets))
    for lo in range(0, xb.shape[0], step):
        out[lo : lo + step] = _forward_chunk(arch, w, xb[lo : lo + step], True)[2]
    return out


def empirical_risk(arch: Architecture, w: WeightVector, data: Dataset) -> float:
    """Mean squared prediction error on the sample (no regularization).

    Summation runs over ascending sample index in fixed chunks, so the value
    is reproducible bit for bit for a given dataset.
    """
    f = forward(arch, w, data.x)
    resid = f - data.y
    return float(np.dot(resid, resid) / data.n)


def predict(est: Estimator, x):
    """Truncated network output; bounded by ``est.beta`` in absolute value."""
    return truncate(est.beta, forward(est.arch, est.weights, x))
