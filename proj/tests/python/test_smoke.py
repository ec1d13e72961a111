import json
import math

import numpy as np
import pytest

import elstm_lab as el


def test_matmul_and_pinv():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(el.matmul(np.eye(2), a), a)
    p = el.pinv(np.array([[1.0, 2.0], [2.0, 4.0]]))
    np.testing.assert_allclose(p, [[0.04, 0.08], [0.08, 0.16]], atol=1e-10)
    rng = np.random.default_rng(0)
    m = rng.standard_normal((7, 4))
    np.testing.assert_allclose(el.pinv(m), np.linalg.pinv(m), atol=1e-10)


def test_ridge_solve_matches_normal_equations():
    rng = np.random.default_rng(1)
    f = rng.standard_normal((9, 3))
    t = rng.standard_normal((9, 2))
    expect = np.linalg.solve(f.T @ f + 0.5 * np.eye(3), f.T @ t)
    np.testing.assert_allclose(el.ridge_solve(f, t, 0.5), expect, atol=1e-10)
    with pytest.raises(ValueError):
        el.ridge_solve(f, t[:4], 0.5)


def test_elm_interpolates():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, (5, 3))
    t = rng.uniform(-1, 1, (5, 2))
    model = el.elm_fit(x, t, 5, seed=3)
    assert model.beta.shape == (5, 2)
    np.testing.assert_allclose(model.predict(x), t, atol=1e-6)


def test_random_letters():
    text = el.gen_random_letters(11000, 7)
    assert len(text) == 11000
    assert set(text) == set("abcdefghijklmnopqrstuvwxyz")
    assert el.gen_random_letters(11000, 7) == text


def test_train_sample_and_checkpoint(tmp_path):
    metrics, model = el.train(text="abab" * 100, model="elstm", hidden=8, epochs=15,
                              seg_len=10, lr=0.5, seed=1)
    assert [m["epoch"] for m in metrics] == list(range(1, 16))
    assert metrics[-1]["accuracy"] >= 0.99
    assert model.kind == "elstm"
    assert model.vocab == "ab"
    loss, acc = model.evaluate("abababab")
    assert acc == 1.0
    assert len(model.sample(length=5, seed=2)) == 5
    path = tmp_path / "model.json"
    model.save(path)
    again = el.load_checkpoint(path)
    assert again.to_json() == model.to_json()
    assert json.loads(path.read_text())["model"] == "elstm"


def test_zero_gain_degeneracy():
    text = el.gen_random_letters(300, 4)
    a, _ = el.train(text=text, model="lstm", hidden=6, epochs=2, seg_len=10)
    b, _ = el.train(text=text, model="elstm", hidden=6, epochs=2, seg_len=10, egate_gain=0.0)
    assert [m["loss"] for m in a] == [m["loss"] for m in b]


def test_compare_report_schema():
    report = el.compare(text=el.gen_random_letters(300, 5), hidden=6, epochs=2, seg_len=10,
                        targets=[3.4, 0.01])
    assert set(report) >= {"models", "overhead_pct", "epochs_to_target"}
    assert report["epochs_to_target"][1]["ratio"] is None
    lstm = report["models"]["lstm"]["mean_epoch_seconds"]
    elstm = report["models"]["elstm"]["mean_epoch_seconds"]
    assert math.isclose(report["overhead_pct"], (elstm - lstm) / lstm * 100, rel_tol=1e-12)


def test_gradcheck():
    for kind in ("lstm", "elstm"):
        assert el.gradcheck(kind)["max_rel_error"] <= 1e-5


def test_errors():
    with pytest.raises(el.InputError):
        el.train(path="/nonexistent/corpus.txt", epochs=1)
    with pytest.raises(ValueError):
        el.train(text="abc", model="gru")
    with pytest.raises(el.NumericError):
        el.train(text=el.gen_random_letters(200, 1), hidden=8, seg_len=10, seed=5, epochs=3,
                 lr=1e308, clip=1e308)
