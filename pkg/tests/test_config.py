import pytest

from clause_forge.config import ENV_VAR, AppConfig, ConfigError, load, parse


def test_defaults_without_file():
    assert load(environ={}) == AppConfig()


def test_parse_types_and_comments():
    got = parse("# comment\n\nepochs = 3\nexpand = no\nlearning-rate=0.5\nmodel = m.json\n")
    assert got == {"epochs": 3, "expand": False, "learning_rate": 0.5, "model": "m.json"}


@pytest.mark.parametrize("text", ["epochs = many", "expand = maybe", "l2 = x", "colour = red", "justakey"])
def test_parse_errors_name_the_line(text):
    with pytest.raises(ConfigError, match=":1:"):
        parse(text)


def test_environment_file(tmp_path):
    path = tmp_path / "cf.conf"
    path.write_text("format = bio\nseed = 7\n")
    cfg = load(environ={ENV_VAR: str(path)})
    assert cfg.format == "bio" and cfg.seed == 7 and cfg.epochs == AppConfig().epochs


def test_explicit_path_beats_environment(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.write_text("seed = 1\n")
    b.write_text("seed = 2\n")
    assert load(b, environ={ENV_VAR: str(a)}).seed == 2


def test_flags_override_file():
    cfg = AppConfig(seed=3, format="bio").merged({"seed": 9, "format": None, "unknown": 1})
    assert cfg.seed == 9 and cfg.format == "bio"


def test_missing_file():
    with pytest.raises(ConfigError):
        load("/nonexistent/cf.conf", environ={})


def test_none_clears_optional_value():
    assert parse("model = none") == {"model": None}
