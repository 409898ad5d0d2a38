import numpy as np
import pytest

from noisybs import NoiseModel, RngSeed, minimal_k, sample_haar_unitary
from noisybs.errors import CombinatorialBlowupError, ValidationError
from noisybs.reporting import StudyRecord, read_csv, write_csv, write_json
from noisybs.sampler import SamplerConfig
from noisybs.studies import (
    TRADEOFF_SOURCES,
    beamsplitter_5050,
    distance_for_unitary,
    resolve_unitary,
    run_bounds_report,
    run_exact,
    run_k_eta_frontier,
    run_markov_study,
    run_postselect,
    run_sample,
    run_tradeoff_table,
    run_variance_study,
)
from noisybs.truncation import TruncationSpec


def test_tradeoff_table_rows_and_mismatch_flag():
    record = run_tradeoff_table()
    assert record.columns[-1] == "mismatch"
    by_label = {row[0]: row for row in record.rows}
    assert len(by_label) == len(TRADEOFF_SOURCES) == 8
    flagged = [row[0] for row in record.rows if row[-1]]
    assert flagged == ["spdc-0.73"]
    qd = by_label["qd-0.30"]
    assert qd[4] == pytest.approx(0.282, abs=1e-12)  # eta * x^2
    assert qd[5] == 3
    # the solver reproduces the tabulated k from the tabulated alpha everywhere else
    for row in record.rows:
        if not row[-1]:
            assert minimal_k(row[6], 0.1) == row[7]


def test_k_eta_frontier_structure():
    record = run_k_eta_frontier()
    etas = sorted(set(record.column("eta")))
    assert etas[0] == 0.30 and etas[-1] == 0.99
    by_eps = {}
    for eps, eta, k in record.rows:
        by_eps.setdefault(eps, []).append((eta, k))
    for eps, rows in by_eps.items():
        ks = [k for _eta, k in sorted(rows)]
        assert all(a <= b for a, b in zip(ks, ks[1:]))  # k grows with eta
    # a stricter accuracy target requires a higher order everywhere
    for eta in (0.5, 0.75, 0.9):
        k_loose = dict((e, k) for e2, e, k in record.rows if e2 == 0.1)[eta]
        k_tight = dict((e, k) for e2, e, k in record.rows if e2 == 0.01)[eta]
        assert k_tight >= k_loose


def test_k_eta_frontier_contains_50_boson_threshold():
    record = run_k_eta_frontier()
    rows01 = sorted((eta, k) for eps, eta, k in record.rows if eps == 0.1)
    crossing = min(eta for eta, k in rows01 if k >= 50)
    assert 0.875 <= crossing <= 0.885


def test_postselect_record():
    record = run_postselect()
    assert record.columns == ["x_squared", "p", "floor_p"]
    (x2_a, p_a, fl_a), (x2_b, p_b, fl_b) = record.rows
    assert x2_a == 0.939 and fl_a == 3 and p_a == pytest.approx(3.665, abs=0.01)
    assert x2_b == 1.0 and fl_b == 7


def test_variance_study_record_shape():
    record = run_variance_study(n_modes=12, trials=40, seed=RngSeed(3))
    assert record.columns == [
        "scenario", "j", "var_cj_xj", "var_normalized", "stderr", "bound_alpha_pow_j",
    ]
    scenarios = set(record.column("scenario"))
    assert scenarios == {"ideal", "lossy", "distinguishable"}
    for row in record.rows:
        if row[1] == 0:
            assert row[3] == 1.0  # normalization convention
    lossy_bounds = [row[5] for row in record.rows if row[0] == "lossy"]
    assert lossy_bounds == [pytest.approx(0.75**j) for j in range(7)]


def test_markov_study_records():
    per_trial, summary = run_markov_study(trials=40, seed=RngSeed(5))
    assert per_trial.columns == ["trial", "d"]
    assert len(per_trial.rows) == 40
    values = dict(summary.rows)
    assert values["mean_d"] <= values["expected_distance_bound"]
    assert values["fraction_d_above_2x_bound"] <= 0.5
    assert per_trial.metadata["alpha"] == pytest.approx(0.6)


def test_markov_study_worker_invariance():
    a, _ = run_markov_study(trials=12, seed=RngSeed(8), workers=1)
    b, _ = run_markov_study(trials=12, seed=RngSeed(8), workers=3)
    assert a.rows == b.rows


def test_distance_vanishes_at_full_order():
    u = sample_haar_unitary(10, RngSeed(13))
    assert distance_for_unitary(u, 4, 3, 0.8, 3) <= 1e-12
    assert distance_for_unitary(u, 4, 3, 0.8, 1) > 0.0


def test_run_exact_beamsplitter_coincidence():
    record = run_exact(n_modes=2, n=2, x=0.5, eta=1.0, seed=RngSeed(1), unitary="beamsplitter")
    rows = {(m, modes): p for m, modes, p in record.rows}
    assert rows[(2, "0|1")] == pytest.approx(0.375, abs=1e-12)
    # eta = 1 leaves no mass on smaller photon numbers
    assert rows[(0, "")] == 0.0
    assert rows[(1, "0")] == 0.0


def test_run_exact_blowup_guard():
    with pytest.raises(CombinatorialBlowupError):
        run_exact(n_modes=40, n=20, x=1.0, eta=0.5, seed=RngSeed(1), state_cap=1000)


def test_run_sample_full_format():
    record = run_sample(
        n_modes=8,
        noise=NoiseModel(x=1.0, eta=0.5, n=3, m=3),
        spec=TruncationSpec(k=2),
        cfg=SamplerConfig(burn_in=200),
        count=50,
        seed=RngSeed(11),
        sampler="full",
    )
    assert record.columns == ["sample_index", "m", "modes"]
    assert len(record.rows) == 50
    for idx, m, modes in record.rows:
        if m == 0:
            assert modes == ""
        else:
            parts = modes.split("|")
            assert len(parts) == m
            assert [int(p) for p in parts] == sorted(int(p) for p in parts)


def test_run_sample_count_zero():
    record = run_sample(
        n_modes=6,
        noise=NoiseModel(x=1.0, eta=1.0, n=2, m=2),
        spec=TruncationSpec(k=2),
        cfg=SamplerConfig(burn_in=10),
        count=0,
        seed=RngSeed(2),
        sampler="fixed",
    )
    assert record.rows == []


def test_resolve_unitary_validation(tmp_path):
    with pytest.raises(ValidationError):
        resolve_unitary("beamsplitter", 3, RngSeed(1))
    bad = tmp_path / "m.npy"
    np.save(bad, np.ones((3, 3)))
    with pytest.raises(ValidationError):
        resolve_unitary(str(bad), 3, RngSeed(1))
    good = tmp_path / "u.npy"
    np.save(good, beamsplitter_5050())
    u = resolve_unitary(str(good), 2, RngSeed(1))
    np.testing.assert_allclose(u, beamsplitter_5050())


def test_run_bounds_report_contents():
    record = run_bounds_report(
        x=1.0, eta=0.5, n=100, m=None, k=20, epsilon=0.1, delta=0.1, c=1.4804
    )
    values = dict(record.rows)
    assert values["alpha"] == pytest.approx(0.5)
    assert values["variable_m_total"] == pytest.approx(0.0678, abs=5e-4)
    assert values["markov_failure_at_2.0x"] == 0.5
    assert values["asymptotic_k"] == pytest.approx(15.29, abs=0.01)


def test_csv_round_trip(tmp_path):
    record = StudyRecord(
        name="demo",
        metadata={"seed": 42, "x": 0.25, "label": "abc"},
        columns=["a", "b", "flag"],
        rows=[(1, 0.1 + 0.2, True), (2, -1.5e-17, False), (3, "x|y", True)],
    )
    path = tmp_path / "demo.csv"
    write_csv(record, path)
    back = read_csv(path)
    assert back.name == "demo"
    assert back.metadata == {"seed": 42, "x": 0.25, "label": "abc"}
    assert back.columns == record.columns
    assert back.rows == record.rows  # floats round-trip bit-exactly via repr


def test_json_writer(tmp_path):
    import json

    record = StudyRecord(name="demo", metadata={"k": 1}, columns=["v"], rows=[(0.1,)])
    path = tmp_path / "demo.json"
    write_json(record, path)
    payload = json.loads(path.read_text())
    assert payload["study"] == "demo"
    assert payload["rows"] == [[0.1]]


def test_figures_render(tmp_path):
    from noisybs.plotting import save_study_figure

    made = []
    made.append(save_study_figure(run_tradeoff_table(), tmp_path / "t.png"))
    made.append(save_study_figure(run_k_eta_frontier(), tmp_path / "f.png"))
    made.append(save_study_figure(run_postselect(), tmp_path / "p.png"))
    per_trial, _ = run_markov_study(trials=20, seed=RngSeed(1))
    made.append(save_study_figure(per_trial, tmp_path / "m.png"))
    variance = run_variance_study(n_modes=10, trials=20, seed=RngSeed(1))
    made.append(save_study_figure(variance, tmp_path / "v.png"))
    assert made[0] is not None and made[0].exists()
    assert made[1] is not None and made[1].exists()
    assert made[2] is None  # postselect has no figure
    assert made[3] is not None and made[3].exists()
    assert made[4] is not None and made[4].exists()
