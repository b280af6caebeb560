import pytest

from dualresearch.config import Settings, dump_settings, load_settings
from dualresearch.errors import ConfigError

from conftest import CORPUS


def test_defaults():
    s = Settings()
    assert (s.exit_threshold, s.min_rounds, s.max_outline_generator_turns) == (8.0, 2, 3)
    assert (s.max_blueprints_len, s.max_query_len, s.filter_threshold) == (10, 5, 0.2)
    assert s.loop_config().max_rounds == 3


def test_fixture_config_loads():
    s = load_settings(CORPUS / "config.yaml")
    assert s.provider == "mock" and s.harness_rounds == 3 and s.num_searches == 5


def test_overrides_skip_none(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("num_searches: 4\n")
    s = load_settings(cfg, {"num_searches": None, "exit_threshold": 7.5})
    assert (s.num_searches, s.exit_threshold) == (4, 7.5)


def test_dump_round_trip(tmp_path):
    s = Settings(num_searches=3, mock_dir="x")
    cfg = tmp_path / "c.yaml"
    cfg.write_text(dump_settings(s))
    assert load_settings(cfg) == s


@pytest.mark.parametrize("text", ["unknown_key: 1\n", "- a\n- b\n", "num_searches: [\n",
                                  "provider: carrier-pigeon\n", "min_rounds: 5\n"])
def test_bad_config(tmp_path, text):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(text)
    with pytest.raises(ConfigError):
        load_settings(cfg)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(tmp_path / "absent.yaml")


def test_role_models():
    s = Settings(model="base", critic_model="strong")
    assert s.model_for("critic") == "strong"
    assert s.model_for("writer") == "base"
