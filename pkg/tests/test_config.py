import math

import pytest

from nucleus.base.config import (
    CONFIG_KEYS,
    Config,
    ConfigError,
    load_config,
    read_config_file,
)


def _write(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_defaults_are_the_two_proton_system():
    config = Config()
    sys = config.spin_system()
    assert (sys.nu_I, sys.nu_S, sys.J, sys.T2star) == (381.5, -381.5, 7.2, 0.3)
    assert config.acquisition.points == 4096
    assert config.acquisition.dwell is None
    assert config.experiment.mode == "ideal"


def test_keys_are_dotted():
    assert "spin.J" in CONFIG_KEYS
    assert "shaped.slices" in CONFIG_KEYS
    assert "spectrometer_mhz" in CONFIG_KEYS
    assert "spin" not in CONFIG_KEYS


def test_read_config_file(tmp_path):
    path = _write(
        tmp_path,
        "# comment\n\nspin.J = 7.0   # trailing\n"
        "acquisition.dwell = auto\nshaped.shape = rectangular\n",
    )
    values, lines = read_config_file(path)
    assert values == {"spin.J": "7.0", "acquisition.dwell": "auto", "shaped.shape": "rectangular"}
    assert lines == {"spin.J": 3, "acquisition.dwell": 4, "shaped.shape": 5}


@pytest.mark.parametrize(
    "text, line",
    [
        ("spin.J = 7.0\nspin.K = 1\n", 2),
        ("spin.J 7.0\n", 1),
        ("spin.J = \n", 1),
        ("spin.J = 7.0\n\nspin.J = 7.1\n", 3),
    ],
)
def test_file_errors_carry_the_line(tmp_path, text, line):
    with pytest.raises(ConfigError) as info:
        read_config_file(_write(tmp_path, text))
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")


def test_non_utf8_line_is_a_config_error(tmp_path):
    path = tmp_path / "binary.conf"
    path.write_bytes(b"# first\nspin.J = 7.2 \xff\n")
    with pytest.raises(ConfigError, match="not UTF-8") as info:
        read_config_file(str(path))
    assert info.value.line == 2


def test_byte_order_mark_is_ignored(tmp_path):
    path = tmp_path / "bom.conf"
    path.write_bytes("spin.J = 7.0\n".encode("utf-8-sig"))
    values, _ = read_config_file(str(path))
    assert values == {"spin.J": "7.0"}


def test_invalid_value_carries_the_line(tmp_path):
    path = _write(tmp_path, "spin.J = 7.2\nspin.T2star = -1\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 2


def test_points_must_be_a_power_of_two(tmp_path):
    path = _write(tmp_path, "acquisition.points = 1000\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 1


def test_precedence(tmp_path):
    path = _write(tmp_path, "spin.J = 6.5\nspin.nu_I = 100\n")
    config = load_config(path, preset="paper", overrides={"spin.nu_I": 200.0})
    assert config.spin.J == 6.5
    assert config.spin.nu_I == 200.0
    assert config.spin.nu_S == -381.5


def test_values_are_coerced(tmp_path):
    path = _write(
        tmp_path,
        "experiment.relaxation = true\nacquisition.dwell = 0.0005\nshaped.slices = 256\n",
    )
    config = load_config(path)
    assert config.experiment.relaxation is True
    assert config.acquisition.dwell == 0.0005
    settings = config.run_settings()
    assert settings.shaped.slices == 256
    assert settings.relaxation


def test_unknown_preset_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(preset="bench")
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.conf"))


def test_unknown_override_key():
    with pytest.raises(ConfigError):
        load_config(overrides={"spin.B0": 1.0})


def test_infinite_t2star_is_allowed():
    config = load_config(overrides={"spin.T2star": "inf"})
    assert math.isinf(config.spin_system().T2star)
