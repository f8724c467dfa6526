"""Quick end-to-end check of the powerprint Python bindings.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import os
import tempfile

import powerprint


def main():
    corpus = powerprint.generate_synthetic(seed=1, per_class=12, length=256)
    labels = [label for label, _, _ in corpus]
    signals = [samples for _, _, samples in corpus]
    assert len(corpus) == 8 * 12

    norm = powerprint.normalize(signals[0])
    assert min(norm) == 0.0 and max(norm) == 1.0

    rows = powerprint.reshape(signals[0])
    assert len(rows) == 16 and all(len(r) == 16 for r in rows)

    lengths = {d: len(powerprint.extract(signals[0], descriptor=d))
               for d in ("lph", "lbp", "ldp", "ltep", "ltrp", "bsif")}
    assert lengths == {"lph": 256, "lbp": 256, "ldp": 56, "ltep": 512, "ltrp": 256, "bsif": 256}, lengths
    h = powerprint.extract(signals[0])
    assert abs(sum(h) - 1.0) < 1e-9

    assert abs(powerprint.ncc(h, h) - 1.0) < 1e-12

    train = list(range(0, len(signals), 2))
    test = list(range(1, len(signals), 2))
    model = powerprint.IknnModel.fit([signals[i] for i in train], [labels[i] for i in train], k=5)
    hits = sum(model.predict(signals[i]) == labels[i] for i in test)
    print(model, "holdout accuracy", hits / len(test))
    assert hits / len(test) > 0.8

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.txt")
        model.save(path)
        again = powerprint.IknnModel.load(path)
        assert [again.predict(signals[i]) for i in test] == [model.predict(signals[i]) for i in test]

    aggregate = [20.0] * 300
    for t in range(50, 150):
        aggregate[t] += 500.0
    events = powerprint.detect_edges(aggregate)
    assert [(i, k) for i, _, k in events] == [(50, "ON"), (150, "OFF")], events
    windows = powerprint.segment(aggregate)
    assert [(s, e) for s, e, _ in windows] == [(50, 150)]

    report = powerprint.kfold_eval(signals, labels, folds=4)
    print("4-fold accuracy", report["accuracy"], "macro-F1", report["macro_f1"])
    assert report["accuracy"] > 0.8

    try:
        powerprint.extract([1.0, 2.0])
    except ValueError as e:
        print("short signal rejected:", e)
    else:
        raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
