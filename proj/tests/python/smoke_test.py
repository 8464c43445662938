"""Smoke tests for the replay_lab python module."""

import math

import replay_lab as rl


def test_normalize():
    assert rl.normalize("Hallo, Welt!") == "hallo welt"
    assert rl.normalize("schon   da") == "schon da"
    assert rl.normalize("straße", sz_to_ss=True) == "strasse"


def test_wer():
    b = rl.wer("a b c", "a x c")
    assert b["substitutions"] == 1
    assert b["insertions"] == 0
    assert b["deletions"] == 0
    assert abs(b["wer"] - 1.0 / 3.0) < 1e-12


def test_schedule():
    assert rl.lr_at(3e-4, 50, 1000, 50) == 3e-4
    assert rl.lr_at(3e-4, 50, 1000, 25) == 1.5e-4
    assert rl.lr_at(3e-4, 50, 1000, 1000) == 0.0


def test_presets():
    p = rl.preset("f4-i4-l4", 24)
    assert p["encoder"] == [0, 1, 2, 3, 10, 11, 12, 13, 20, 21, 22, 23]
    both = rl.preset("last6", 12, 12, scope="both")
    assert both["encoder"] == [6, 7, 8, 9, 10, 11]
    assert both["decoder"] == [6, 7, 8, 9, 10, 11]
    dec = rl.preset("last3", 12, 12, scope="decoder-only")
    assert dec["encoder"] == []
    assert dec["decoder"] == [9, 10, 11]


def test_replay_schedule():
    stats = rl.replay_schedule_stats(1404, 20000, 0.1, seed=1, batch_size=32, epochs=2)
    assert len(stats) == 2
    for epoch in stats:
        assert epoch["replay_count"] == 141
        assert epoch["new_count"] == 1404


def test_dataset():
    train = rl.generate_dataset("S", "train")
    dev = rl.generate_dataset("S", "dev")
    test = rl.generate_dataset("S", "test")
    assert len(train) + len(dev) + len(test) == 1560  # 30 speakers x 52 sentences
    assert len(train) == 1404
    again = rl.generate_dataset("S", "dev")
    assert [u["id"] for u in again] == [u["id"] for u in dev]
    assert all(u["frames"] >= len(u["transcript"]) for u in train[:50])


def test_ctc():
    # single frame, empty target: loss is -log softmax(blank)
    logits = [[0.5, -0.2, 0.1]]
    denom = sum(math.exp(x) for x in logits[0])
    expected = -math.log(math.exp(logits[0][0]) / denom)
    assert abs(rl.ctc_loss(logits, [], blank=0) - expected) < 1e-12

    frames = [[0, 5, 0], [0, 5, 0], [5, 0, 0], [0, 0, 5]]
    assert rl.greedy_ctc(frames, blank=0) == [1, 2]


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} smoke tests passed")


if __name__ == "__main__":
    main()
