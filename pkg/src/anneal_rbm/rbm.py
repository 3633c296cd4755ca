"""Binary-unit RBM: energy model, conditionals, Gibbs sampling and exact
small-instance computations.

Units take values in {0, 1}. The energy of a joint configuration (v, h) is

    E(v, h) = - sum_ij w_ij v_i h_j - sum_i a_i v_i - sum_j b_j h_j

and the model distribution is P(v, h) = exp(-E) / Z at temperature 1; any
other temperature is equivalent to a uniform rescaling of the parameters,
so no temperature knob appears here.

Everything that enumerates states marginalizes the *larger* layer
analytically and enumerates the smaller one, which keeps 16+16 machines
exact and fast. Enumeration refuses above 2**20 states rather than
silently approximating.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, IntractableError

# Largest layer size we are willing to enumerate (2**20 states).
MAX_ENUM_UNITS = 20

# Chunk size for enumeration loops; bounds peak memory at a few MB.
_CHUNK = 1 << 14


def sigmoid(x):
    """Numerically safe logistic function."""
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x):
    """log(1 + exp(x)) without overflow."""
    return np.logaddexp(0.0, x)


def bit_configs(n: int, offset: int = 0, count: int | None = None) -> np.ndarray:
    """Rows are the binary configurations of `n` bits, LSB = unit 0.

    `offset`/`count` select a slice of the full 2**n enumeration so callers
    can chunk.
    """
    if count is None:
        count = (1 << n) - offset
    idx = np.arange(offset, offset + count, dtype=np.uint64)
    return ((idx[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & 1).astype(float)


@dataclass(frozen=True)
class RbmParams:
    """Weights, biases and connectivity mask of an RBM.

    `w[i, j]` couples visible unit i to hidden unit j. Entries where
    `mask[i, j] == 0` are forced to zero at construction and are never
    written by training updates.
    """

    n_v: int
    n_h: int
    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n_v < 1 or self.n_h < 1:
            raise ContractViolation("n_v and n_h must be >= 1")
        w = np.asarray(self.w, dtype=float)
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if w.shape != (self.n_v, self.n_h):
            raise ContractViolation(f"w must have shape ({self.n_v}, {self.n_h})")
        if a.shape != (self.n_v,) or b.shape != (self.n_h,):
            raise ContractViolation("bias vector shape mismatch")
        mask = self.mask
        if mask is None:
            mask = np.ones((self.n_v, self.n_h), dtype=np.uint8)
        else:
            mask = (np.asarray(mask) != 0).astype(np.uint8)
            if mask.shape != w.shape:
                raise ContractViolation("mask shape mismatch")
        w = np.where(mask == 1, w, 0.0)
        if not (np.isfinite(w).all() and np.isfinite(a).all() and np.isfinite(b).all()):
            raise ContractViolation("parameters must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def zeros(cls, n_v: int, n_h: int, mask=None) -> "RbmParams":
        return cls(n_v, n_h, np.zeros((n_v, n_h)), np.zeros(n_v), np.zeros(n_h), mask)

    def replace_params(self, w, a, b) -> "RbmParams":
        """New RbmParams with the same shape and mask."""
        return RbmParams(self.n_v, self.n_h, w, a, b, self.mask)


@dataclass(frozen=True)
class BinaryConfig:
    """One joint (visible, hidden) configuration with values in {0, 1}."""

    v: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.uint8)
        h = np.asarray(self.h, dtype=np.uint8)
        if v.ndim != 1 or h.ndim != 1:
            raise ContractViolation("v and h must be vectors")
        if not (np.isin(v, (0, 1)).all() and np.isin(h, (0, 1)).all()):
            raise ContractViolation("units must be 0 or 1")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "h", h)


@dataclass(frozen=True)
class PairStatistics:
    """Expectations <v_i h_j>, <v_i>, <h_j> (data- or model-side)."""

    vh: np.ndarray
    v_mean: np.ndarray
    h_mean: np.ndarray


def _check_dims(rbm: RbmParams, v, h) -> None:
    if v is not None and np.shape(v)[-1] != rbm.n_v:
        raise ContractViolation("visible vector length mismatch")
    if h is not None and np.shape(h)[-1] != rbm.n_h:
        raise ContractViolation("hidden vector length mismatch")


def energy(rbm: RbmParams, cfg: BinaryConfig) -> float:
    """Joint energy of one configuration."""
    _check_dims(rbm, cfg.v, cfg.h)
    v = cfg.v.astype(float)
    h = cfg.h.astype(float)
    return float(-v @ rbm.w @ h - rbm.a @ v - rbm.b @ h)


def energy_batch(rbm: RbmParams, v: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Energies for row-aligned batches of visible/hidden configurations."""
    _check_dims(rbm, v, h)
    v = np.asarray(v, dtype=float)
    h = np.asarray(h, dtype=float)
    return -np.einsum("ni,ij,nj->n", v, rbm.w, h) - v @ rbm.a - h @ rbm.b


def hidden_activation(rbm: RbmParams, v: np.ndarray) -> np.ndarray:
    """Pre-sigmoid input to each hidden unit given visible values."""
    return np.asarray(v, dtype=float) @ rbm.w + rbm.b


def visible_activation(rbm: RbmParams, h: np.ndarray) -> np.ndarray:
    return np.asarray(h, dtype=float) @ rbm.w.T + rbm.a


def conditional(rbm: RbmParams, layer: str, given: np.ndarray) -> np.ndarray:
    """P(unit = 1 | other layer) for every unit of `layer`.

    `layer` is 'hidden' (given visible values) or 'visible' (given hidden
    values). Works on a single vector or a batch of rows.
    """
    if layer == "hidden":
        _check_dims(rbm, given, None)
        return sigmoid(hidden_activation(rbm, given))
    if layer == "visible":
        _check_dims(rbm, None, given)
        return sigmoid(visible_activation(rbm, given))
    raise ContractViolation(f"layer must be 'hidden' or 'visible', got {layer!r}")


def gibbs_chain(rbm: RbmParams, v0: np.ndarray, n_g: int,
                rng: np.random.Generator) -> BinaryConfig:
    """Alternating block Gibbs from visible start `v0`.

    The visible layer is updated `n_g` times (hidden -> visible per step),
    then the hidden layer is sampled once more from the final visible
    state. n_g = 0 therefore returns v0 unchanged with one hidden draw.
    """
    v, h = gibbs_chain_batch(rbm, np.asarray(v0, dtype=np.uint8)[None, :], n_g, rng)
    return BinaryConfig(v[0], h[0])


def gibbs_chain_batch(rbm: RbmParams, v0: np.ndarray, n_g: int,
                      rng: np.random.Generator, clamp_idx=None):
    """Vectorized `gibbs_chain` over rows of `v0`; returns (v, h) arrays.

    `clamp_idx` optionally lists visible indices that are never resampled
    (used for reconstruction with pinned pixels).
    """
    if n_g < 0:
        raise ContractViolation("n_g must be >= 0")
    _check_dims(rbm, v0, None)
    v = np.asarray(v0, dtype=np.uint8).copy()
    fixed = None
    if clamp_idx is not None:
        fixed = v[:, clamp_idx].copy()
    for _ in range(n_g):
        h = (rng.random((v.shape[0], rbm.n_h)) < conditional(rbm, "hidden", v))
        v = (rng.random(v.shape) < conditional(rbm, "visible", h.astype(np.uint8)))
        v = v.astype(np.uint8)
        if fixed is not None:
            v[:, clamp_idx] = fixed
    h = (rng.random((v.shape[0], rbm.n_h)) < conditional(rbm, "hidden", v)).astype(np.uint8)
    return v, h


def positive_statistics(rbm: RbmParams, dataset: np.ndarray) -> PairStatistics:
    """Data-clamped statistics using exact hidden conditionals.

    For each data vector r the hidden units enter through P(h_j = 1 | r)
    rather than a sample, which equals the clamped expectation exactly
    (Rao-Blackwellized form) and has no Monte-Carlo variance.
    """
    data = np.atleast_2d(np.asarray(dataset, dtype=float))
    if data.shape[0] == 0:
        raise ContractViolation("dataset must be nonempty")
    _check_dims(rbm, data, None)
    p_h = conditional(rbm, "hidden", data)
    n = data.shape[0]
    return PairStatistics(
        vh=data.T @ p_h / n,
        v_mean=data.mean(axis=0),
        h_mean=p_h.mean(axis=0),
    )


def _enumeration_side(rbm: RbmParams) -> str:
    small = min(rbm.n_v, rbm.n_h)
    if small > MAX_ENUM_UNITS:
        raise IntractableError(
            f"exact enumeration needs min(n_v, n_h) <= {MAX_ENUM_UNITS}, "
            f"got {rbm.n_v}+{rbm.n_h}"
        )
    return "v" if rbm.n_v <= rbm.n_h else "h"


def _marginal_log_weight(rbm: RbmParams, configs: np.ndarray, side: str) -> np.ndarray:
    """ln sum over the opposite layer of exp(-E) for each enumerated config."""
    if side == "v":
        return configs @ rbm.a + softplus(configs @ rbm.w + rbm.b).sum(axis=1)
    return configs @ rbm.b + softplus(configs @ rbm.w.T + rbm.a).sum(axis=1)


def exact_log_partition(rbm: RbmParams) -> float:
    """ln Z at T = 1, enumerating the smaller layer.

    The larger layer is summed analytically per unit:
    ln Z = ln sum_v exp(a.v) prod_j (1 + exp(b_j + (v W)_j)) for the
    visible-enumeration form; accumulation is overflow-safe.
    """
    side = _enumeration_side(rbm)
    n = rbm.n_v if side == "v" else rbm.n_h
    best = -np.inf
    # two passes: max first, then shifted sum (keeps memory at chunk size)
    for off in range(0, 1 << n, _CHUNK):
        cnt = min(_CHUNK, (1 << n) - off)
        lw = _marginal_log_weight(rbm, bit_configs(n, off, cnt), side)
        best = max(best, float(lw.max()))
    acc = 0.0
    for off in range(0, 1 << n, _CHUNK):
        cnt = min(_CHUNK, (1 << n) - off)
        lw = _marginal_log_weight(rbm, bit_configs(n, off, cnt), side)
        acc += float(np.exp(lw - best).sum())
    return best + float(np.log(acc))


def exact_model_statistics(rbm: RbmParams) -> PairStatistics:
    """Exact <v_i h_j>, <v_i>, <h_j> under the Boltzmann law at T = 1."""
    side = _enumeration_side(rbm)
    n = rbm.n_v if side == "v" else rbm.n_h
    ln_z = exact_log_partition(rbm)
    vh = np.zeros((rbm.n_v, rbm.n_h))
    v_mean = np.zeros(rbm.n_v)
    h_mean = np.zeros(rbm.n_h)
    for off in range(0, 1 << n, _CHUNK):
        cnt = min(_CHUNK, (1 << n) - off)
        cfg = bit_configs(n, off, cnt)
        p = np.exp(_marginal_log_weight(rbm, cfg, side) - ln_z)
        if side == "v":
            p_h = sigmoid(cfg @ rbm.w + rbm.b)
            vh += (cfg * p[:, None]).T @ p_h
            v_mean += cfg.T @ p
            h_mean += p_h.T @ p
        else:
            p_v = sigmoid(cfg @ rbm.w.T + rbm.a)
            vh += (p_v * p[:, None]).T @ cfg
            h_mean += cfg.T @ p
            v_mean += p_v.T @ p
    return PairStatistics(vh=vh, v_mean=v_mean, h_mean=h_mean)


def free_energy(rbm: RbmParams, v: np.ndarray) -> np.ndarray:
    """Visible free energy F(v) = -ln sum_h exp(-E(v, h)), rows of `v`."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    _check_dims(rbm, v, None)
    return -(v @ rbm.a) - softplus(v @ rbm.w + rbm.b).sum(axis=1)


def save_rbm(rbm: RbmParams, path) -> None:
    """Plain-text checkpoint: header 'RBM n_v n_h', then w rows, a, b.

    Values carry 17 significant digits so float64 round-trips exactly.
    Masked weights are stored as the zeros they are; the mask itself is
    structural and is not part of the format.
    """
    lines = [f"RBM {rbm.n_v} {rbm.n_h}"]
    for row in rbm.w:
        lines.append(" ".join(f"{x:.17g}" for x in row))
    lines.append(" ".join(f"{x:.17g}" for x in rbm.a))
    lines.append(" ".join(f"{x:.17g}" for x in rbm.b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_rbm(path) -> RbmParams:
    with open(path) as fh:
        lines = [ln for ln in (line.strip() for line in fh) if ln]
    head = lines[0].split()
    if len(head) != 3 or head[0] != "RBM":
        raise ContractViolation(f"bad RBM header: {lines[0]!r}")
    n_v, n_h = int(head[1]), int(head[2])
    if len(lines) != 1 + n_v + 2:
        raise ContractViolation("truncated RBM file")
    w = np.array([[float(x) for x in lines[1 + i].split()] for i in range(n_v)])
    a = np.array([float(x) for x in lines[1 + n_v].split()])
    b = np.array([float(x) for x in lines[2 + n_v].split()])
    return RbmParams(n_v, n_h, w, a, b)
