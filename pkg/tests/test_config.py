import hashlib

import pytest

from excursionlab.config import KEYS, ConfigError, RunConfig, build_config, format_value, parse_text, parse_value

MINIMAL = "interval = 0,1\nt = 10\nn = 1000\nseed = 1\n"


def test_minimal_config_fills_defaults_and_echoes():
    cfg = build_config(parse_text(MINIMAL))
    assert cfg.interval == (0.0, 1.0) and cfg.t == 10.0 and cfg.n == 1000 and cfg.seed == 1
    assert cfg.coarse_dt == RunConfig().coarse_dt
    echoed = build_config(parse_text(cfg.render()))
    assert echoed == cfg and echoed.digest() == cfg.digest()
    assert "n = 1000" in cfg.render().splitlines()


def test_reversed_interval_names_the_key():
    with pytest.raises(ConfigError, match="^interval"):
        build_config(parse_text("interval = 1,0\n"))


def test_flag_overrides_file():
    cfg = build_config(parse_text(MINIMAL), {"seed": 7})
    assert cfg.seed == 7


def test_unknown_key_and_bad_value_are_located():
    with pytest.raises(ConfigError, match=r"cfg:2: unknown key 'colour'"):
        parse_text("t = 1\ncolour = red\n", "cfg")
    with pytest.raises(ConfigError, match=r"cfg:1: bad value for 'n'"):
        parse_text("n = many\n", "cfg")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_text("t = 1\nt = 2\n")
    with pytest.raises(ConfigError, match="expected"):
        parse_text("just words\n")
    with pytest.raises(ConfigError):
        build_config({}, {"nope": 1})


def test_comments_and_blank_lines():
    assert parse_text("# heading\n\nt = 2  # trailing\n") == {"t": 2.0}


@pytest.mark.parametrize("text,key", [
    ("coarse_dt = 0", "coarse_dt"),
    ("fine_dt = -1e-6", "fine_dt"),
    ("coarse_dt = 1e-4\nfine_dt = 1e-3", "fine_dt"),
    ("t = 0", "t"),
    ("t_list = 5,1", "t_list"),
    ("y = 0.1,2.0", "y"),
    ("mode = bogus", "mode"),
    ("grid_x = 0.5,1.5", "grid_x"),
])
def test_validation_errors_name_the_key(text, key):
    with pytest.raises(ConfigError, match=f"^{key}:"):
        build_config(parse_text(text))


def test_every_key_round_trips_through_its_parser():
    cfg = RunConfig()
    for key, value in cfg.items():
        assert parse_value(key, format_value(value)) == value
    assert set(KEYS) == {k for k, _ in cfg.items()}


def test_digest_is_git_blob_sha1():
    cfg = RunConfig()
    body = (cfg.render() + "\n").encode()
    assert cfg.digest() == hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()
    assert build_config({}, {"seed": 2}).digest() != cfg.digest()
