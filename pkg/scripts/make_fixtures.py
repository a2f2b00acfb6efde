"""Regenerate the synthetic panels shipped in src/somnb/data and tests/data.

Real bureau data is not redistributable, so the shipped panels are drawn
from a seeded generator: districts with random sector mixes and noisy
year-over-year growth, and a province whose sector amounts are the sum of
its districts.  Running this script again reproduces the files byte for
byte.

    python scripts/make_fixtures.py
"""

from pathlib import Path

import numpy as np

from somnb.dataset import SECTORS, SectorSeries, features_from_panel, save_feature_csv, save_panel_csv

ROOT = Path(__file__).resolve().parents[1]


def synthetic_panel(name: str, n_districts: int, years, seed: int) -> list[SectorSeries]:
    rng = np.random.default_rng(seed)
    years = list(years)
    districts = []
    province = np.zeros((len(SECTORS), len(years)))
    for d in range(n_districts):
        size = rng.lognormal(mean=8.0, sigma=0.6)
        share = rng.dirichlet(np.full(len(SECTORS), 0.8))
        base = np.maximum(size * share, 1.0)
        growth = rng.normal(5.0, 3.0, size=len(SECTORS))
        amounts = np.empty((len(SECTORS), len(years)))
        amounts[:, 0] = base
        for t in range(1, len(years)):
            rate = growth + rng.normal(0.0, 2.0, size=len(SECTORS))
            amounts[:, t] = amounts[:, t - 1] * (1 + rate / 100)
        amounts = np.round(amounts, 2)
        province += amounts
        for s, sector in enumerate(SECTORS):
            districts.append(
                SectorSeries(f"{name}-d{d + 1:02d}", "district", sector, tuple(zip(years, amounts[s].tolist())))
            )
    prov = [
        SectorSeries(name, "province", sector, tuple(zip(years, np.round(province[s], 2).tolist())))
        for s, sector in enumerate(SECTORS)
    ]
    return districts + prov


def degenerate_rows(seed: int):
    """A tight mass of near-identical rows plus two far outliers."""
    from somnb.dataset import FeatureRow

    rng = np.random.default_rng(seed)
    rows = []
    for i in range(52):
        v = 5.0 + rng.normal(0.0, 0.05, size=4)
        rows.append(FeatureRow(*v.round(4).tolist(), region_id=f"mass{i + 1:02d}"))
    rows.append(FeatureRow(955.95, 279.96, 950.0, 275.0, region_id="outlier1"))
    rows.append(FeatureRow(944.1, 281.3, 948.2, 270.4, region_id="outlier2"))
    return rows


def main():
    data = ROOT / "src" / "somnb" / "data"
    panel = synthetic_panel("central-java", 15, range(2009, 2014), seed=20140101)
    save_panel_csv(panel, data / "central_java_synthetic_panel.csv")
    save_feature_csv(features_from_panel(panel), data / "central_java_synthetic_features.csv")

    tests = ROOT / "tests" / "data"
    tests.mkdir(exist_ok=True)
    save_feature_csv(degenerate_rows(seed=7), tests / "degenerate_train_after_swap.csv")


if __name__ == "__main__":
    main()
