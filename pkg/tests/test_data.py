import numpy as np
import pytest

from mmxblx.alcotask import N_LEADS, N_SAMPLES, SubjectRecord, composite_signal, evaluate, teachers_of
from mmxblx.core import RandomSource, ValidationError
from mmxblx.data import (
    FormatError,
    SyntheticConfig,
    Trial,
    build_subject,
    generate_synthetic,
    load_dataset,
    read_subject,
    read_trial,
    reject_artifacts,
    save_dataset,
    write_subject,
    write_trial,
)

from .conftest import chromosome, sub


def trial_with(value, index=0, sid="x1"):
    m = np.zeros((N_LEADS, N_SAMPLES))
    m[5, 17] = value
    return Trial(sid, index, m)


@pytest.mark.parametrize("value, kept", [(100.0, True), (-100.0, True), (100.5, False), (-250.0, False)])
def test_artifact_threshold(value, kept):
    assert (len(reject_artifacts([trial_with(value)])) == 1) is kept


def test_artifact_filter_idempotent():
    trials = [trial_with(v, k) for k, v in enumerate([3.0, 120.0, 99.9, -101.0, 100.0])]
    once = reject_artifacts(trials)
    assert [t.trial_index for t in once] == [0, 2, 4]
    assert reject_artifacts(once) == once


def test_subject_needs_enough_trials():
    rng = RandomSource(0)
    assert build_subject([trial_with(1.0, k) for k in range(39)], "control", rng) is None
    assert build_subject([trial_with(1.0, k) for k in range(40)], "control", rng) is not None


def test_identical_trials_give_identical_train_and_test():
    train, test = build_subject([trial_with(7.5, k) for k in range(50)], "alcoholic", RandomSource(1))
    np.testing.assert_array_equal(train.signals, test.signals)
    assert train.signals[5, 17] == 7.5 and train.label == "alcoholic" and train.subject_id == "x1"


def test_average_is_mean_of_36_distinct_trials():
    # Trial k carries the integer k at one sample, so 36 times the average is an integer sum.
    trials = [trial_with(float(k), k) for k in range(45)]
    for seed in range(5):
        train, test = build_subject(trials, "control", RandomSource(seed))
        for rec in (train, test):
            total = rec.signals[5, 17] * 36
            assert abs(total - round(total)) < 1e-9
            assert rec.signals.sum() == pytest.approx(rec.signals[5, 17])
    # Averaging is linear in the inputs.
    doubled = [Trial(t.subject_id, t.trial_index, 2 * t.matrix + 1) for t in trials]
    a, _ = build_subject(trials, "control", RandomSource(9))
    b, _ = build_subject(doubled, "control", RandomSource(9))
    np.testing.assert_allclose(b.signals, 2 * a.signals + 1, rtol=1e-12)


def test_train_and_test_draws_differ():
    trials = [trial_with(float(k), k) for k in range(80)]
    train, test = build_subject(trials, "control", RandomSource(4))
    assert train.signals[5, 17] != test.signals[5, 17]


def test_synthetic_sizes_and_order():
    train, test = generate_synthetic(SyntheticConfig())
    for recs in (train, test):
        assert len(recs) == 78
        labels = [r.label for r in recs]
        assert labels == ["alcoholic"] * 47 + ["control"] * 31
        assert recs[0].subject_id == "a001" and recs[47].subject_id == "c001"


def test_synthetic_noiseless_composite_is_the_waveform():
    cfg = SyntheticConfig(noise_sd=0.0, n_alcoholic=2, n_control=2)
    train, test = generate_synthetic(cfg)
    weights = sub(0, *[(lead, (w,)) for lead, w in cfg.planted_leads])
    wave = composite_signal(train[0], weights)
    expected = np.zeros(N_SAMPLES)
    expected[149:157] = 6.0
    expected[157:] = 2.0
    np.testing.assert_allclose(wave, expected, atol=1e-12)
    np.testing.assert_array_equal(composite_signal(train[3], weights), np.zeros(N_SAMPLES))
    np.testing.assert_array_equal(train[0].signals, test[0].signals)


def test_synthetic_determinism():
    a, _ = generate_synthetic(SyntheticConfig(seed=5, n_alcoholic=3, n_control=2))
    b, _ = generate_synthetic(SyntheticConfig(seed=5, n_alcoholic=3, n_control=2))
    c, _ = generate_synthetic(SyntheticConfig(seed=6, n_alcoholic=3, n_control=2))
    assert a == b
    assert a != c


def test_train_and_test_noise_independent():
    train, test = generate_synthetic(SyntheticConfig(n_alcoholic=2, n_control=2))
    r = np.corrcoef(train[2].signals.ravel(), test[2].signals.ravel())[0, 1]
    assert abs(r) < 0.02
    assert train[2].signals.std() == pytest.approx(2.0, rel=0.02)


def test_noiseless_plant_is_separable():
    cfg = SyntheticConfig(noise_sd=0.0, n_alcoholic=5, n_control=4)
    train, _ = generate_synthetic(cfg)
    chrom = chromosome(
        sub(0, *[(lead, (w,)) for lead, w in cfg.planted_leads]),
        sub(1, (2, ())),
        sub(2, (cfg.insertion_position + 8, (8,))),
        sub(3, (1, (0.5, 3, 1.0))),
    )
    assert evaluate(chrom, train, teachers_of(train)) == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"planted_leads": [(63, 1.0)]},
        {"planted_leads": [(3, 1.0), (3, 2.0)]},
        {"pattern": []},
        {"insertion_position": 250},
        {"noise_sd": -1.0},
        {"planted_leads": [(3, 0.0)]},
    ],
)
def test_synthetic_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        SyntheticConfig(**kwargs)


def test_dataset_round_trip(tmp_path):
    train, _ = generate_synthetic(SyntheticConfig(n_alcoholic=2, n_control=2))
    save_dataset(tmp_path / "train.txt", train, "train")
    back = load_dataset(tmp_path / "train.txt")
    assert back == train
    assert (tmp_path / "train" / "a001.txt").exists()


def test_trial_round_trip(tmp_path):
    t = Trial("co2a0000364", 12, np.random.default_rng(0).normal(size=(N_LEADS, N_SAMPLES)))
    write_trial(tmp_path / "t.txt", t)
    back = read_trial(tmp_path / "t.txt")
    assert (back.subject_id, back.trial_index) == ("co2a0000364", 12)
    np.testing.assert_array_equal(back.matrix, t.matrix)


def test_short_subject_file_names_the_subject(tmp_path):
    path = tmp_path / "s.txt"
    write_subject(path, SubjectRecord("a042", "alcoholic", np.zeros((N_LEADS, N_SAMPLES))))
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(FormatError, match="a042.*expected 62 rows, found 61"):
        read_subject(path)


def test_bad_value_reports_line(tmp_path):
    path = tmp_path / "s.txt"
    write_subject(path, SubjectRecord("a042", "alcoholic", np.zeros((N_LEADS, N_SAMPLES))))
    lines = path.read_text().splitlines()
    lines[3] = lines[3].replace("0.0", "oops", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError, match="line 4"):
        read_subject(path)


def test_bad_label_rejected(tmp_path):
    path = tmp_path / "s.txt"
    write_subject(path, SubjectRecord("a042", "alcoholic", np.zeros((N_LEADS, N_SAMPLES))))
    text = path.read_text().replace("alcoholic", "unknown", 1)
    path.write_text(text)
    with pytest.raises(FormatError, match="label"):
        read_subject(path)
