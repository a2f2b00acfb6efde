import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_blobs
from somnb.dataset import fit_normalizer
from somnb.errors import DimensionMismatch, EmptyInput, NonFinite, SchemaError
from somnb.report import dumps
from somnb.som import (
    GridSpec,
    SomConfig,
    SomModel,
    assign_labels,
    find_bmu,
    grid_positions,
    hit_counts,
    initial_prototypes,
    neighborhood,
    quantization_error,
    som_energy,
    train_som,
    update_prototype,
)

BLOB_SEED = 11
SOM_SEED = 0


def test_hex_positions():
    h = math.sqrt(3) / 2
    np.testing.assert_allclose(grid_positions(GridSpec(2, 2)), [[0, 0], [1, 0], [0.5, h], [1.5, h]], atol=1e-15)
    np.testing.assert_array_equal(grid_positions(GridSpec(2, 2, "rectangular")), [[0, 0], [1, 0], [0, 1], [1, 1]])
    for topo in ("hexagonal", "rectangular"):
        np.testing.assert_array_equal(grid_positions(GridSpec(1, 1, topo)), [[0, 0]])


@pytest.mark.parametrize("topology", ["hexagonal", "rectangular"])
def test_nearest_neighbour_distance_is_one(topology):
    pos = grid_positions(GridSpec(4, 5, topology))
    d = np.sqrt(((pos[:, None] - pos[None]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    np.testing.assert_allclose(d.min(axis=1), 1.0, atol=1e-12)


def test_find_bmu_examples():
    assert find_bmu((1, 1), [(0, 0), (1, 1)]) == (1, 0.0)
    assert find_bmu((1, 0), [(0, 0), (2, 0)]) == (0, 1.0)
    assert find_bmu((3, 0), [(0, 0), (3, 4)]) == (0, 3.0)
    with pytest.raises(DimensionMismatch):
        find_bmu((1, 2, 3), [(0, 0)])


def _naive_bmu(x, prototypes):
    best, best_d = None, None
    for i, p in enumerate(prototypes):
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(x, p)))
        if best_d is None or d < best_d:
            best, best_d = i, d
    return best, best_d


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.integers(1, 6))
def test_find_bmu_matches_naive_scan(seed, m, d):
    rng = np.random.default_rng(seed)
    protos = rng.normal(size=(m, d))
    x = rng.normal(size=d)
    b, dist = find_bmu(x, protos)
    nb, nd = _naive_bmu(x.tolist(), protos.tolist())
    assert b == nb
    assert dist == pytest.approx(nd, rel=1e-12)


def test_neighborhood_examples():
    pos = grid_positions(GridSpec(2, 2))
    assert neighborhood(2, 2, 0.5, pos) == 1.0
    assert neighborhood(0, 1, 1.0, pos) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert neighborhood(0, 1, 1.0, pos) == pytest.approx(0.60653, abs=1e-5)
    # hand: squared grid distance 1.5^2 + (sqrt(3)/2)^2 = 3
    assert neighborhood(0, 3, 1.0, pos) == pytest.approx(math.exp(-1.5), abs=1e-15)
    assert neighborhood(0, 3, 1.0, pos) == pytest.approx(0.22313, abs=1e-5)


@given(st.integers(0, 11), st.integers(0, 11), st.floats(0.05, 10))
def test_neighborhood_bounds_and_symmetry(b, i, sigma):
    pos = grid_positions(GridSpec(3, 4))
    h = neighborhood(b, i, sigma, pos)
    assert 0 <= h <= 1
    assert h == neighborhood(i, b, sigma, pos)
    if b == i:
        assert h == 1


def test_neighborhood_strictly_decreasing_in_grid_distance():
    pos = grid_positions(GridSpec(3, 4))
    d2 = ((pos[0] - pos) ** 2).sum(-1)
    order = np.argsort(d2, kind="stable")
    hs = [neighborhood(0, int(i), 1.3, pos) for i in order]
    for (da, ha), (db, hb) in zip(zip(d2[order], hs), zip(d2[order][1:], hs[1:])):
        if db > da + 1e-12:
            assert hb < ha
    assert all(0 < h < 1 for h in hs[1:])


def test_update_prototype_examples():
    np.testing.assert_array_equal(update_prototype((1, 2), (5, 5), 0.0, 0.7), [1, 2])
    np.testing.assert_array_equal(update_prototype((1, 2), (5, 5), 1.0, 1.0), [5, 5])
    np.testing.assert_array_equal(update_prototype((0, 0), (2, 4), 0.5, 0.5), [0.5, 1.0])
    with pytest.raises(DimensionMismatch):
        update_prototype((0, 0), (1, 2, 3), 0.5, 0.5)


def test_config_defaults_and_validation():
    cfg = SomConfig().resolved()
    assert cfg.grid == GridSpec(2, 2, "hexagonal")
    assert cfg.epochs == 1000
    assert cfg.sigma0 == pytest.approx(math.sqrt(3) / 2)
    assert SomConfig(grid=GridSpec(1, 1)).resolved().sigma0 == cfg.sigma_min
    with pytest.raises(ValueError):
        SomConfig(alpha0=0.1, alpha_end=0.2)
    with pytest.raises(ValueError):
        SomConfig(sigma0=0.1, sigma_min=0.3)
    with pytest.raises(ValueError):
        GridSpec(0, 2)


def test_identical_rows_collapse_prototypes():
    v = np.array([3.0, -1.0, 7.5, 0.25])
    model = train_som(np.tile(v, (10, 1)), SomConfig(seed=5))
    np.testing.assert_allclose(model.prototypes, np.tile(v, (4, 1)), atol=1e-6)


def test_prototypes_converge_from_spread_init():
    # one far row among identical ones makes the init range non-trivial
    v = np.array([1.0, 2.0])
    rows = np.vstack([np.tile(v, (30, 1)), [[1.5, 2.5]]])
    model = train_som(rows, SomConfig(grid=GridSpec(1, 1), seed=1))
    assert find_bmu(v, model.prototypes)[1] < 0.1


def test_training_is_deterministic():
    x, _ = make_blobs(40, 3)
    a = train_som(x, SomConfig(epochs=50, seed=9))
    b = train_som(x, SomConfig(epochs=50, seed=9))
    c = train_som(x, SomConfig(epochs=50, seed=10))
    assert a.prototypes.tobytes() == b.prototypes.tobytes()
    assert a.prototypes.tobytes() != c.prototypes.tobytes()


def test_training_errors():
    with pytest.raises(EmptyInput):
        train_som(np.zeros((0, 4)))
    with pytest.raises(NonFinite):
        train_som([[1.0, 2.0], [math.nan, 1.0]])


def test_blobs_get_one_unit_each():
    # reference run: blob data seed 11, map seed 0
    x, blob = make_blobs(135, BLOB_SEED)
    model = train_som(x, SomConfig(seed=SOM_SEED))
    labels = np.array(assign_labels(model, x))
    per_blob = [set(labels[blob == k]) for k in range(4)]
    assert all(len(s) == 1 for s in per_blob)
    assert len(set.union(*per_blob)) == 4


def test_blob_quantization_error_regression():
    x, _ = make_blobs(135, BLOB_SEED)
    cfg = SomConfig(seed=SOM_SEED)
    model = train_som(x, cfg)
    start = SomModel(cfg.resolved(), model.positions, initial_prototypes(x, cfg))
    trained_qe, initial_qe = quantization_error(model, x), quantization_error(start, x)
    assert trained_qe < initial_qe
    assert trained_qe == pytest.approx(3.6279724621923353, rel=1e-9)
    assert initial_qe == pytest.approx(43.273871969584704, rel=1e-9)


def test_assign_labels_examples():
    x, _ = make_blobs(20, 1)
    model = train_som(x, SomConfig(epochs=20))
    assert assign_labels(model, model.prototypes) == [0, 1, 2, 3]
    assert assign_labels(model, np.zeros((0, 4))) == []
    assert hit_counts(model, x).sum() == 20
    with pytest.raises(DimensionMismatch):
        assign_labels(model, [[1.0, 2.0]])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_labels_in_range(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(15, 3)) * rng.uniform(0.1, 100)
    model = train_som(x, SomConfig(grid=GridSpec(2, 3), epochs=5, seed=seed))
    labels = assign_labels(model, rng.normal(size=(30, 3)))
    assert all(0 <= v < 6 for v in labels)


def test_quantization_error_examples():
    protos = np.array([[0.0, 0.0], [10.0, 10.0]])
    model = SomModel(SomConfig(grid=GridSpec(1, 2)), grid_positions(GridSpec(1, 2)), protos)
    assert quantization_error(model, protos) == 0.0
    assert quantization_error(model, [[2.0, 0.0]]) == pytest.approx(4.0)
    with pytest.raises(EmptyInput):
        quantization_error(model, np.zeros((0, 2)))


def _energy_oracle(x, protos, positions, sigma):
    total = 0.0
    for xi in x:
        b = _naive_bmu(xi, protos)[0]
        for j, mj in enumerate(protos):
            g2 = sum((p - q) ** 2 for p, q in zip(positions[b], positions[j]))
            total += math.exp(-g2 / (2 * sigma**2)) * sum((a - c) ** 2 for a, c in zip(xi, mj))
    return total


def test_som_energy():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(12, 3))
    one = SomModel(SomConfig(grid=GridSpec(1, 1)), np.zeros((1, 2)), np.array([[0.5, -0.5, 1.0]]))
    assert som_energy(one, x, 0.7) == pytest.approx(float(((x - one.prototypes[0]) ** 2).sum()), rel=1e-12)
    model = train_som(x, SomConfig(epochs=10, seed=2))
    for sigma in (0.3, 1.0, 2.5):
        expected = _energy_oracle(x.tolist(), model.prototypes.tolist(), model.positions.tolist(), sigma)
        assert som_energy(model, x, sigma) == pytest.approx(expected, rel=1e-12)


def test_normalization_is_stored_and_applied():
    x, _ = make_blobs(40, 2)
    x = x * [1.0, 100.0, 1.0, 0.01]
    norm = fit_normalizer(x)
    model = train_som(x, SomConfig(epochs=30, seed=1), norm)
    assert model.normalization == norm
    z = (x - np.array(norm.mean)) / np.array(norm.sd)
    plain = SomModel(model.config, model.positions, model.prototypes)
    assert assign_labels(model, x) == assign_labels(plain, z)


def test_model_serialization_round_trip():
    import json

    x, _ = make_blobs(30, 5)
    model = train_som(x, SomConfig(epochs=10, seed=3), fit_normalizer(x))
    back = SomModel.from_dict(json.loads(dumps(model.to_dict())))
    assert back.prototypes.tobytes() == model.prototypes.tobytes()
    assert back.positions.tobytes() == model.positions.tobytes()
    assert back.config == model.config
    assert back.normalization == model.normalization
    with pytest.raises(SchemaError):
        SomModel.from_dict({"schema": "other"})
