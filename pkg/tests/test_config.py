import pytest

from thermocovert.config import Config
from thermocovert.sensor import DtsConfig
from thermocovert.thermal_model import ChipTopology, ConfigurationError


def test_round_trip(tmp_path):
    cfg = Config(topology=ChipTopology(r_lateral=2.0), sensor=DtsConfig(noise_sigma=0.1))
    path = cfg.save(tmp_path / "c.toml")
    back = Config.load(path)
    assert back == cfg
    assert back.digest == cfg.digest
    assert back.digest != Config().digest


def test_partial_file_keeps_defaults(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[sensor]\nnoise_sigma = 0.0\n")
    cfg = Config.load(p)
    assert cfg.sensor.noise_sigma == 0.0
    assert cfg.topology == ChipTopology()


@pytest.mark.parametrize("text", ["[bogus]\nx = 1\n", "[power]\nwatts = 3\n",
                                  "[topology]\nr_lateral = -1.0\n", "not toml ["])
def test_rejects_bad_files(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    with pytest.raises(ConfigurationError):
        Config.load(p)


def test_sensor_field_errors_become_configuration_errors():
    with pytest.raises(ConfigurationError):
        Config.from_dict({"sensor": {"resolution": 0.0}})
