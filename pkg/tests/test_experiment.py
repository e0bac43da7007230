import json
import math

import numpy as np
import pytest

from oracles import risk_by_hand
from semeq.equalizer import SelectionPolicy
from semeq.experiment import (CSV_COLUMNS, METHODS, ExperimentConfig, average_risk, grid_points,
                              read_results, run_experiment)
from semeq.ot import P1Config
from semeq.semlang import Message, deterministic_language

GOLDEN_HEADER = "method,snr_db,radius,accuracy,avg_risk,entropy,symbols_per_message,seed,error"


def cheap(**kw):
    base = dict(p1=P1Config(max_outer_iters=2, max_fw_iters=2), n_source=40, n_target=120,
                rho_samples=500, messages=800, learned_eq={"epochs": 2})
    base.update(kw)
    return ExperimentConfig(**base)


def test_defaults_are_valid():
    cfg = ExperimentConfig()
    assert cfg.messages == 10_000 and cfg.snr_db == (math.inf,)
    assert (cfg.n_source, cfg.n_target) == (200, 1000)
    src, tgt, kmap = cfg.languages()
    assert (src.n_atoms, tgt.n_atoms) == (10, 2)


@pytest.mark.parametrize("kw", [{"messages": 0}, {"snr_db": ()}, {"methods": ("magic",)},
                                {"radius": (1.5,)}, {"radius": ()}, {"repeats": 0},
                                {"workers": 0}, {"kmap": "sorted"}, {"methods": ()}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ExperimentConfig(**kw)


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({"mesages": 10})


def test_config_all_methods_and_snr_parsing():
    cfg = ExperimentConfig(methods=("all",), snr_db=("inf", 0, "-5"))
    assert cfg.methods == METHODS
    assert cfg.snr_db == (math.inf, 0.0, -5.0)


def test_config_json_round_trip():
    cfg = ExperimentConfig(snr_db=("inf", 3.0), radius=(0.1, 1.0), methods=("all",), seed=4,
                           kmap="parity")
    d = json.loads(json.dumps(cfg.to_dict()))
    back = ExperimentConfig.from_dict(d)
    assert back.to_dict() == cfg.to_dict()


def test_csv_header_is_golden(tmp_path):
    assert ",".join(CSV_COLUMNS) == GOLDEN_HEADER
    path = tmp_path / "r.csv"
    run_experiment(cheap(methods=("semcom_noeq",)), path)
    assert path.read_text().splitlines()[0] == GOLDEN_HEADER


def test_grid_order_and_radius_column():
    cfg = cheap(methods=("semcom_noeq", "codebook_eq"), snr_db=("inf", 0), radius=(0.5, 1.0),
                repeats=2)
    pts = list(grid_points(cfg))
    assert len(pts) == 2 * 2 * (1 + 2)
    assert pts[0] == (0, "semcom_noeq", math.inf, None)
    assert pts[1] == (0, "codebook_eq", math.inf, 0.5)
    assert len(set(pts)) == len(pts)


def test_rows_are_unique_and_bounded(tmp_path):
    cfg = cheap(methods=("all",), snr_db=("inf", 5), radius=(1.0,))
    rows = run_experiment(cfg, tmp_path / "r.csv")
    keys = {(r.method, r.snr_db, r.radius, r.seed) for r in rows}
    assert len(keys) == len(rows) == len(METHODS) * 2
    for r in rows:
        assert not r.error, r.error
        assert 0.0 <= r.accuracy <= 1.0
        if r.avg_risk is not None:
            assert 0.0 <= r.avg_risk <= 1.0
    csv_rows = read_results(tmp_path / "r.csv")
    assert [c["method"] for c in csv_rows] == [r.method for r in rows]
    by = {r["method"]: r for r in csv_rows if r["snr_db"] == "inf"}
    assert by["semcom_noeq"]["radius"] == "" and by["codebook_eq"]["radius"] == "1.0"
    assert by["classcom_a"]["symbols_per_message"] == "8.0"


def test_grid_point_errors_are_isolated(tmp_path):
    cfg = cheap(methods=("learned_linear_eq", "semcom_noeq"),
                learned_eq={"learning_rate": 1e4, "epochs": 2})
    rows = run_experiment(cfg, tmp_path / "r.csv")
    bad, good = rows
    assert bad.error and "exceeded" in bad.error and bad.accuracy is None
    assert not good.error and good.accuracy is not None
    csv_rows = read_results(tmp_path / "r.csv")
    assert csv_rows[0]["error"] and csv_rows[0]["accuracy"] == ""


def test_identical_config_gives_identical_csv(tmp_path):
    cfg = cheap(methods=("codebook_eq", "semcom_noeq", "classcom_b"), snr_db=("inf", 0))
    run_experiment(cfg, tmp_path / "a.csv")
    run_experiment(cfg, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_workers_do_not_change_results(tmp_path):
    cfg = cheap(methods=("codebook_eq", "semcom_noeq", "classcom_a"), snr_db=("inf", 0, 10))
    run_experiment(cfg, tmp_path / "a.csv")
    run_experiment(ExperimentConfig.from_dict({**cfg.to_dict(), "workers": 3}), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_method_set_does_not_change_a_method_result():
    # messages and channel noise are keyed by (seed, snr) only
    alone = run_experiment(cheap(methods=("semcom_noeq",), snr_db=(0.0,)))
    mixed = run_experiment(cheap(methods=("classcom_a", "codebook_eq", "semcom_noeq"),
                                 snr_db=(0.0,)))
    assert alone[0].accuracy == [r for r in mixed if r.method == "semcom_noeq"][0].accuracy


def test_codebook_eq_with_identity_maps_equals_noeq(monkeypatch):
    import semeq.experiment as ex
    from semeq.codebook import Codebook

    def identity_codebook(src, tgt, kmap, *a, **k):
        return Codebook.identity(src.dimension, kmap)

    monkeypatch.setattr(ex, "build_codebook", identity_codebook)
    rows = run_experiment(cheap(methods=("codebook_eq", "semcom_noeq"), snr_db=(0.0, "inf")))
    acc = {(r.method, r.snr_db): r.accuracy for r in rows}
    for snr in (0.0, math.inf):
        assert acc[("codebook_eq", snr)] == acc[("semcom_noeq", snr)]


def test_codebook_beats_noeq_on_mismatched_fixture():
    rows = run_experiment(cheap(methods=("codebook_eq", "semcom_noeq")))
    acc = {r.method: r.accuracy for r in rows}
    assert acc["codebook_eq"] > acc["semcom_noeq"]


def test_accuracy_is_monotone_in_snr():
    snrs = (-5.0, 0.0, 10.0, "inf")
    cfg = cheap(methods=("codebook_eq", "classcom_a", "classcom_b"), snr_db=snrs, repeats=5,
                messages=1000)
    rows = run_experiment(cfg)
    for method in cfg.methods:
        means = []
        for snr in cfg.snr_db:
            acc = [r.accuracy for r in rows if r.method == method and r.snr_db == snr]
            means.append(np.mean(acc))
        # two standard errors of a mean over 5 x 1000 Bernoulli draws
        se = 2 * math.sqrt(0.25 / 5000)
        assert all(b >= a - 2 * se for a, b in zip(means, means[1:])), (method, means)


def test_average_risk_examples():
    rho = np.array([[0.9, 0.2], [0.1, 0.8]])
    lang = deterministic_language([[1.0], [-1.0]])
    assert average_risk(SelectionPolicy.bayes(np.eye(2)), [0, 1, 1, 0], lang) == 0.0
    assert average_risk(SelectionPolicy.identity(np.ones(2)), [Message(0), Message(1)], lang) == 0.0
    # one-hot posteriors at the centroids: risks 1 - 0.9 and 1 - 0.8 under Bayes selection
    want = (risk_by_hand(rho, [1, 0], 0) + risk_by_hand(rho, [0, 1], 1)) / 2
    assert average_risk(SelectionPolicy.bayes(rho), [0, 1], lang) == pytest.approx(want)
    assert want == pytest.approx(0.15)
    with pytest.raises(ValueError):
        average_risk(SelectionPolicy.bayes(rho), [], lang)


def test_average_risk_with_soft_posteriors():
    from semeq.semlang import AtomModel, Language, atom_posterior

    lang = Language(1, (AtomModel(0, [0.5], 1.0), AtomModel(1, [-0.5], 1.0)))
    rho = np.array([[0.9, 0.2], [0.1, 0.8]])
    pol = SelectionPolicy.fixed(1, rho)
    u0, u1 = atom_posterior(lang, 0), atom_posterior(lang, 1)
    want = (risk_by_hand(rho, u0, 1) + risk_by_hand(rho, u1, 1)) / 2
    assert average_risk(pol, [0, 1], lang) == pytest.approx(want, abs=1e-15)
