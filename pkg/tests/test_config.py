import json

import pytest

from voltforecast.config import load_config, parse_config
from voltforecast.errors import ConfigError
from voltforecast.evaluation import STAGE_NAMES

BASE = {"data": {"synth": {"n_cycles": 2}}}


def cfg(**extra):
    d = json.loads(json.dumps(BASE))
    d.update(extra)
    return d


def test_minimal_config_defaults():
    c = parse_config(cfg())
    assert c.seed == 0 and c.synth.n_cycles == 2
    assert c.data.window_length == 16 and c.evaluation.k == 5
    assert c.evaluation.stages is None


def test_shipped_default_config(tmp_path):
    c = load_config("configs/default.json")
    assert [m.name for m in c.models][:3] == ["Linear regressor", "Neural Network", "LSTM"]
    assert len(c.models) == 7
    assert [name for name, _ in c.evaluation.stages.stages()] == list(STAGE_NAMES)


@pytest.mark.parametrize("doc,key", [
    ({"data": {"synth": {}}, "bogus": 1}, "bogus"),
    ({"data": {"synth": {"n_cycles": 0}}}, "n_cycles"),
    ({"data": {"synth": {"capacity_Ah": -1}}}, "capacity_Ah"),
    ({"data": {"synth": {}, "path": "x.csv"}}, "data"),
    ({}, "data"),
    ({"data": {"synth": {}}, "seed": -1}, "seed"),
    ({"data": {"synth": {}}, "models": [{"kind": "svm"}]}, "models[0].kind"),
    ({"data": {"synth": {}}, "models": [{"kind": "knn", "options": {"kk": 1}}]}, "models[0].options.kk"),
    ({"data": {"synth": {}}, "models": [{"kind": "knn", "options": {"seed": 1}}]}, "models[0].options.seed"),
    ({"data": {"synth": {}}, "models": [{"kind": "knn"}, {"kind": "knn"}]}, "models"),
    ({"data": {"synth": {}}, "preprocessing": {"window_length": 0}}, "preprocessing.window_length"),
    ({"data": {"synth": {}}, "preprocessing": {"impute": "zero"}}, "preprocessing.impute"),
    ({"data": {"synth": {}}, "evaluation": {"zero_policy": "x"}}, "evaluation.zero_policy"),
    ({"data": {"synth": {}}, "evaluation": {"stages": {"stage3": {}}}}, "evaluation.stages.stage3"),
    ({"data": {"synth": {}}, "evaluation": {"stages": {"base": {"train": {"seed": 3}}}}}, "evaluation.stages.base.train.seed"),
])
def test_errors_name_the_key(doc, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.key == key


def test_stage_overrides():
    c = parse_config(cfg(evaluation={"stages": {"hidden_size": 4, "stage1": {"grid": {"epochs": [1, 2]}}}}))
    plan = c.evaluation.stages
    assert plan.stage1.grid.epochs == (1, 2)
    assert plan.stage1.grid.batch_sizes == (16, 32, 64)
    assert plan.base.spec.options["hidden_size"] == 4


def test_models_inherit_shared_preprocessing():
    c = parse_config(cfg(preprocessing={"standardize": False},
                         models=[{"kind": "linear"}, {"kind": "tree", "preprocessing": {"standardize": True}}]))
    assert c.models[0].preprocessing.standardize is False
    assert c.models[1].preprocessing.standardize is True


def test_relative_data_path(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"data": {"path": "d.csv"}}))
    assert load_config(tmp_path / "cfg.json").data_path == str(tmp_path / "d.csv")


def test_derived_seeds_are_stable_and_distinct():
    a = parse_config(cfg(seed=5)).derived_seeds()
    b = parse_config(cfg(seed=5)).derived_seeds()
    assert a == b and len(set(a.values())) == len(a)
    assert parse_config(cfg(seed=6)).derived_seeds() != a


def test_seed_override():
    c = parse_config(cfg()).with_overrides(seed=2**64 - 1, output_dir="o")
    assert c.seed == 2**64 - 1 and c.output_dir == "o"
    with pytest.raises(ConfigError):
        parse_config(cfg()).with_overrides(seed=2**64)
