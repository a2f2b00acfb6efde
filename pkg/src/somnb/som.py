"""Online Kohonen self-organizing map on a small hexagonal or rectangular grid.

Training presents every row once per epoch in a freshly shuffled order.
Each presentation finds the best-matching unit and pulls *all* units
towards the row, weighted by a Gaussian kernel over grid distance.  The
learning coefficient and the kernel width both decay linearly over the
total number of presentations.  Everything random comes from one
``numpy.random.Generator`` seeded by ``SomConfig.seed``, so a model is a
pure function of (rows, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from somnb.dataset import NormalizationParams, apply_normalizer, as_matrix
from somnb.errors import DimensionMismatch, EmptyInput, NonFinite, SchemaError

TOPOLOGIES = ("hexagonal", "rectangular")
SCHEMA = "somnb.som-model/1"


@dataclass(frozen=True)
class GridSpec:
    rows: int = 2
    cols: int = 2
    topology: str = "hexagonal"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")

    @property
    def n_units(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class SomConfig:
    """Training hyper-parameters.

    ``sigma0=None`` means half the grid diameter (largest pairwise grid
    distance), never below ``sigma_min``.  Call :meth:`resolved` to get a
    config with that default materialized.
    """

    grid: GridSpec = field(default_factory=GridSpec)
    epochs: int = 1000
    alpha0: float = 0.5
    alpha_end: float = 0.01
    sigma0: float | None = None
    sigma_min: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if not 0 < self.alpha_end <= self.alpha0 <= 1:
            raise ValueError(f"need 0 < alpha_end <= alpha0 <= 1, got {self.alpha_end}, {self.alpha0}")
        if not self.sigma_min > 0:
            raise ValueError("sigma_min must be positive")
        if self.sigma0 is not None and self.sigma0 < self.sigma_min:
            raise ValueError(f"need sigma_min <= sigma0, got {self.sigma_min}, {self.sigma0}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def resolved(self) -> "SomConfig":
        if self.sigma0 is not None:
            return self
        pos = grid_positions(self.grid)
        diameter = float(np.sqrt(_grid_sq_distances(pos).max()))
        return replace(self, sigma0=max(diameter / 2, self.sigma_min))

    def to_dict(self) -> dict:
        return {
            "grid": {"rows": self.grid.rows, "cols": self.grid.cols, "topology": self.grid.topology},
            "epochs": self.epochs,
            "alpha0": self.alpha0,
            "alpha_end": self.alpha_end,
            "sigma0": self.sigma0,
            "sigma_min": self.sigma_min,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d) -> "SomConfig":
        return cls(
            grid=GridSpec(**d["grid"]),
            epochs=int(d["epochs"]),
            alpha0=float(d["alpha0"]),
            alpha_end=float(d["alpha_end"]),
            sigma0=None if d["sigma0"] is None else float(d["sigma0"]),
            sigma_min=float(d["sigma_min"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True, eq=False)
class SomModel:
    config: SomConfig
    positions: np.ndarray
    prototypes: np.ndarray
    normalization: NormalizationParams = field(default_factory=NormalizationParams)

    @property
    def n_units(self) -> int:
        return self.prototypes.shape[0]

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "config": self.config.to_dict(),
            "positions": self.positions.tolist(),
            "prototypes": self.prototypes.tolist(),
            "normalization": self.normalization.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "SomModel":
        if d.get("schema") != SCHEMA:
            raise SchemaError(f"expected schema {SCHEMA!r}, got {d.get('schema')!r}")
        return cls(
            config=SomConfig.from_dict(d["config"]),
            positions=_frozen(d["positions"]),
            prototypes=_frozen(d["prototypes"]),
            normalization=NormalizationParams.from_dict(d["normalization"]),
        )


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def grid_positions(spec: GridSpec) -> np.ndarray:
    """Planar coordinates of every unit, indexed ``u = r * cols + c``.

    Hexagonal grids shift odd rows right by half a unit and space rows by
    sqrt(3)/2, so every pair of lattice neighbours is exactly 1 apart.
    """
    r, c = np.divmod(np.arange(spec.n_units), spec.cols)
    if spec.topology == "hexagonal":
        return np.column_stack([c + 0.5 * (r % 2), r * (math.sqrt(3) / 2)])
    return np.column_stack([c, r]).astype(np.float64)


def _grid_sq_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return (diff**2).sum(axis=-1)


def _sq_distances(x: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    diff = x - prototypes
    return (diff * diff).sum(axis=1)


def _check_dim(x: np.ndarray, prototypes: np.ndarray) -> None:
    if x.shape[-1] != prototypes.shape[1]:
        raise DimensionMismatch(f"input has {x.shape[-1]} features, prototypes have {prototypes.shape[1]}")


def find_bmu(x, prototypes) -> tuple[int, float]:
    """Index and Euclidean distance of the nearest prototype (lowest index on ties)."""
    x = np.asarray(x, dtype=np.float64)
    prototypes = np.atleast_2d(np.asarray(prototypes, dtype=np.float64))
    if prototypes.shape[0] == 0:
        raise EmptyInput("no prototypes")
    _check_dim(x, prototypes)
    sq = _sq_distances(x, prototypes)
    b = int(np.argmin(sq))
    return b, math.sqrt(sq[b])


def neighborhood(b: int, i: int, sigma: float, positions) -> float:
    """Gaussian kernel ``exp(-|r_b - r_i|^2 / (2 sigma^2))`` over grid positions."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    positions = np.asarray(positions, dtype=np.float64)
    d2 = float(((positions[b] - positions[i]) ** 2).sum())
    return math.exp(-d2 / (2.0 * sigma * sigma))


def update_prototype(m, x, alpha: float, h: float) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if m.shape != x.shape:
        raise DimensionMismatch(f"prototype shape {m.shape} != input shape {x.shape}")
    return m + alpha * h * (x - m)


def _training_matrix(rows) -> np.ndarray:
    x = as_matrix(rows)
    if x.shape[0] == 0:
        raise EmptyInput("cannot train a map on zero rows")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x).all(axis=1))[0])
        raise NonFinite(f"row {bad} has a non-finite value", index=bad)
    return x


def _init_prototypes(rng: np.random.Generator, x: np.ndarray, n_units: int) -> np.ndarray:
    lo, hi = x.min(axis=0), x.max(axis=0)
    return lo + rng.random((n_units, x.shape[1])) * (hi - lo)


def initial_prototypes(rows, config: SomConfig, normalization: NormalizationParams | None = None) -> np.ndarray:
    """The prototypes ``train_som`` starts from for the same inputs."""
    x = apply_normalizer(normalization or NormalizationParams(), _training_matrix(rows))
    return _init_prototypes(np.random.default_rng(config.seed), x, config.grid.n_units)


def train_som(rows, config: SomConfig = SomConfig(), normalization: NormalizationParams | None = None) -> SomModel:
    """Fit a map to ``rows``.

    Parameters
    ----------
    rows : sequence of FeatureRow or array-like of shape (n, d)
        Raw training rows.
    config : SomConfig
        Grid, schedules, epochs and seed.
    normalization : NormalizationParams, optional
        Applied to ``rows`` before training and stored on the model, so
        later lookups on raw rows go through the same transform.

    Returns
    -------
    SomModel
    """
    config = config.resolved()
    normalization = normalization or NormalizationParams()
    x = apply_normalizer(normalization, _training_matrix(rows))
    n = x.shape[0]
    positions = grid_positions(config.grid)
    grid_d2 = _grid_sq_distances(positions)

    rng = np.random.default_rng(config.seed)
    protos = _init_prototypes(rng, x, config.grid.n_units)

    total = config.epochs * n
    frac = np.arange(total, dtype=np.float64) / (total - 1) if total > 1 else np.zeros(1)
    alphas = (config.alpha0 + (config.alpha_end - config.alpha0) * frac).tolist()
    sigmas = config.sigma0 + (config.sigma_min - config.sigma0) * frac
    kernel_coef = (-1.0 / (2.0 * sigmas * sigmas)).tolist()

    # Plain lists beat numpy here: the maps are tiny and the per-call overhead dominates.
    p = protos.tolist()
    xs = x.tolist()
    g = grid_d2.tolist()
    units, dim = range(len(p)), range(x.shape[1])
    exp = math.exp
    t = 0
    for _ in range(config.epochs):
        for idx in rng.permutation(n).tolist():
            xi = xs[idx]
            b, best = 0, math.inf
            for u in units:
                pu = p[u]
                s = 0.0
                for k in dim:
                    e = xi[k] - pu[k]
                    s += e * e
                if s < best:
                    b, best = u, s
            gb, a, c = g[b], alphas[t], kernel_coef[t]
            for u in units:
                f = a * exp(gb[u] * c)
                pu = p[u]
                for k in dim:
                    pu[k] += f * (xi[k] - pu[k])
            t += 1
    protos = np.array(p, dtype=np.float64)

    return SomModel(config, _frozen(positions), _frozen(protos), normalization)


def _lookup_matrix(model: SomModel, rows) -> np.ndarray:
    x = as_matrix(rows)
    if x.shape[0] == 0:
        return x.reshape(0, model.dim)
    _check_dim(x, model.prototypes)
    return apply_normalizer(model.normalization, x)


def _bmu_all(model: SomModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # argmin over squared distance: same winner as over distance, lowest index on ties
    sq = ((x[:, None, :] - model.prototypes[None, :, :]) ** 2).sum(axis=-1)
    b = sq.argmin(axis=1)
    return b, sq[np.arange(len(b)), b]


def assign_labels(model: SomModel, rows) -> list[int]:
    """0-based BMU index of every row, in input order."""
    x = _lookup_matrix(model, rows)
    if x.shape[0] == 0:
        return []
    return _bmu_all(model, x)[0].tolist()


def hit_counts(model: SomModel, rows) -> np.ndarray:
    return np.bincount(assign_labels(model, rows), minlength=model.n_units)


def quantization_error(model: SomModel, rows) -> float:
    """Mean squared distance from each row to its BMU."""
    x = _lookup_matrix(model, rows)
    if x.shape[0] == 0:
        raise EmptyInput("quantization error of zero rows")
    return float(np.mean(_bmu_all(model, x)[1]))


def som_energy(model: SomModel, rows, sigma: float) -> float:
    """Kernel-weighted distortion sum_i sum_j h(b_i, j) |x_i - m_j|^2 at fixed ``sigma``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = _lookup_matrix(model, rows)
    if x.shape[0] == 0:
        raise EmptyInput("energy of zero rows")
    b, _ = _bmu_all(model, x)
    h = np.exp(-_grid_sq_distances(model.positions) / (2.0 * sigma * sigma))
    sq = ((x[:, None, :] - model.prototypes[None, :, :]) ** 2).sum(axis=-1)
    return float((h[b] * sq).sum())
