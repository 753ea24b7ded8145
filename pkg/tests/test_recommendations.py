import numpy as np
import pytest

from _support import random_trace
from memorec.apl import AplConfig, recommend_apl
from memorec.canonical import canonicalize
from memorec.mem import MemConfig, recommend_mem
from memorec.recommendations import CacheImplHint, Recommendation, RecommendationSet


def test_round_trip_of_generated_sets(tmp_path):
    rng = np.random.default_rng(31)
    for i in range(30):
        records = random_trace(rng, value_depth=2)
        for rs in (recommend_apl(records, AplConfig(changeability_ceiling=1.0)),
                   recommend_mem(records, MemConfig(min_mean_time_ns=0))):
            rs.save(tmp_path / "r.json")
            back = RecommendationSet.load(tmp_path / "r.json")
            assert back == rs and back.dumps() == rs.dumps()


def test_whitelist_serialization_is_order_free():
    keys = [(canonicalize("b"), canonicalize(2)), (canonicalize("a"), canonicalize(1))]
    a = RecommendationSet("APL", (Recommendation("m", 1.0, frozenset(keys)),))
    b = RecommendationSet("APL", (Recommendation("m", 1.0, frozenset(reversed(keys))),))
    assert a.dumps() == b.dumps()


def test_validation():
    with pytest.raises(ValueError):
        RecommendationSet("XYZ")
    with pytest.raises(ValueError):
        Recommendation("m", float("nan"))
    with pytest.raises(ValueError):
        Recommendation("m", 1.0, frozenset())
    with pytest.raises(ValueError):
        CacheImplHint(size="huge")


def test_restrict_and_get():
    rs = RecommendationSet("MEM", (Recommendation("a", 2.0), Recommendation("b", 1.0)))
    assert rs.restrict(["b", "zzz"]).methods == ["b"]
    assert rs.get("a").score == 2.0 and rs.get("c") is None
