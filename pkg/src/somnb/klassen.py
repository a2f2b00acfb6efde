"""Klassen typology: place a district sector in one of four quadrants.

The quadrant depends only on whether the district's growth (v1) and
contribution (v2) reach the province's values (v3, v4).  Ties count as
reaching it.

    ============  ==================  ==================
                  contribution high   contribution low
    ============  ==================  ==================
    growth high   1  developed        3  developing
    growth low    2  stagnant         4  underdeveloped
    ============  ==================  ==================
"""

from __future__ import annotations

import math
from enum import IntEnum
from typing import Iterable

from somnb.dataset import FeatureRow
from somnb.errors import NonFinite


class Quadrant(IntEnum):
    DEVELOPED = 1
    STAGNANT = 2
    DEVELOPING = 3
    UNDERDEVELOPED = 4


_TABLE = {
    (True, True): Quadrant.DEVELOPED,
    (False, True): Quadrant.STAGNANT,
    (True, False): Quadrant.DEVELOPING,
    (False, False): Quadrant.UNDERDEVELOPED,
}


def classify_quadrant(row) -> Quadrant:
    """Quadrant of a FeatureRow or a plain ``(v1, v2, v3, v4)`` sequence."""
    v1, v2, v3, v4 = row.values if isinstance(row, FeatureRow) else row
    if not all(math.isfinite(float(v)) for v in (v1, v2, v3, v4)):
        raise NonFinite(f"non-finite feature in {(v1, v2, v3, v4)}")
    return _TABLE[(v1 >= v3, v2 >= v4)]


def classify_all(rows: Iterable) -> list[Quadrant]:
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(classify_quadrant(row))
        except NonFinite as exc:
            raise NonFinite(f"row {i}: {exc}", index=i) from None
    return out
