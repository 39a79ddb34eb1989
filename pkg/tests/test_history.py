import json

import numpy as np

from lvego.history import RunHistory, RunRecord
from lvego.problems import MixedPoint


def _hist(ys):
    h = RunHistory("branin", "lv-ego", 3, 2, len(ys))
    for i, y in enumerate(ys):
        h.append(MixedPoint.of([0.1 * i], [1 + i % 4]), y, "doe" if i < 2 else "search",
                 1000.0 + i, refit=True, info={"ei": np.float64(0.5), "flag": np.bool_(True)})
    return h


def test_best_so_far_is_running_minimum():
    h = _hist([5.0, 3.0, 4.0, 1.0, 2.0])
    assert list(h.best_so_far) == [5.0, 3.0, 3.0, 1.0, 1.0]
    assert h.run_id == "branin-lv-ego-3"
    point, y = h.best_point()
    assert y == 1.0 and point == h.records[3].point
    assert [r.index for r in h.search_records()] == [2, 3, 4]


def test_best_point_first_on_ties():
    h = _hist([2.0, 1.0, 1.0])
    assert h.best_point()[0] == h.records[1].point


def test_json_round_trip_and_native_types():
    h = _hist([5.0, 3.0, 4.0])
    text = h.to_json()
    back = RunHistory.from_json(text)
    assert back.to_json() == text
    assert json.loads(text)["records"][0]["info"] == {"ei": 0.5, "flag": True}
    assert np.array_equal(back.X, h.X) and np.array_equal(back.U, h.U)


def test_canonical_json_ignores_timestamps():
    a, b = _hist([1.0, 2.0, 0.5]), _hist([1.0, 2.0, 0.5])
    for r in b.records:
        r.timestamp += 123.0
    assert a.canonical_json() == b.canonical_json()
    assert a.to_json() != b.to_json()
    assert "timestamp" not in a.canonical_json()


def test_record_defaults():
    r = RunRecord.from_dict({"index": 0, "x": [0.2], "u": [2], "y": 1.0, "best": 1.0,
                             "phase": "doe"})
    assert r.refit is False and r.dual is None and r.info == {}
