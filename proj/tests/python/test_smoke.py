import math

import pytest

import coforget


def test_decay_at_sixty_seconds():
    d = coforget.decay_score(0.0, 60.0)
    assert d["combined"] == pytest.approx(0.6025953096975747129, abs=1e-12)
    assert d["variance"] == pytest.approx(0.18676601957050699222, abs=1e-12)
    assert d["high_variance"]
    assert not d["propose_forget"]


def test_negative_age_raises():
    with pytest.raises(coforget.CoforgetError, match="NegativeAge"):
        coforget.decay_score(10.0, 5.0)


def test_vote_threshold():
    vote, c = coforget.form_vote(0.5, 0.25)
    assert vote == "forget"
    assert c == pytest.approx(0.35)
    # C equal to the threshold keeps
    assert coforget.form_vote(1.0, 0.0) == ("keep", pytest.approx(0.4))


def test_quorum_and_score():
    q = coforget.quorum_threshold([1.5, 1.5, 1.0, 1.0])
    assert q == pytest.approx(10 / 3)
    agents = [("p1", 1.5, 1.0), ("p2", 1.5, 1.0), ("e1", 1.0, 1.0), ("e2", 1.0, 1.0)]
    s = coforget.weighted_forget_score([("p1", "forget"), ("p2", "forget"), ("e1", "keep")], agents)
    assert s == pytest.approx(3.0)
    assert s < q


def test_config_checks():
    cfg = coforget.ProtocolConfig()
    assert coforget.check_config(cfg) == []
    cfg.n_agents = 3
    codes = [code for code, _ in coforget.check_config(cfg)]
    assert "FaultBoundViolation" in codes


def test_frame_round_trip():
    raw = coforget.encode_frame(1, 7, "planner-1", ["m-1"], "forget")
    f = coforget.decode_frame(raw)
    assert f == {"kind": 1, "epoch": 7, "sender": "planner-1", "ids": ["m-1"], "vote": "forget"}
    with pytest.raises(coforget.CoforgetError, match="TruncatedFrame"):
        coforget.decode_frame(raw[:-1])


def test_cosine():
    assert coforget.cosine_similarity([1.0, 0.0], [0.0, 2.0]) == 0.0
    assert math.isclose(coforget.cosine_similarity([1.0, 1.0], [2.0, 2.0]), 1.0)


def test_small_simulation_is_deterministic():
    cfg = "workload.initial_items = 200\ndimension = 32\n"
    a = coforget.run_simulation("baseline_no_faults", 5, 3, cfg)
    b = coforget.run_simulation("baseline_no_faults", 5, 3, cfg)
    assert a == b
    s = a["summary"]
    assert s["epochs"] == 5
    assert s["final_footprint"] <= s["final_baseline"]
    assert len(a["epochs"]) == 5
