import pytest

from anomalycd import InputError, PipelineConfig, load_config
from anomalycd.config import config_hash


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config(None)
        assert cfg.detector.alpha_theta == 10.0
        assert cfg.detector.w_theta == 5760
        assert cfg.detector.alpha_iota == 20.0
        assert cfg.detector.k_iota == 5.0
        assert cfg.detector.p_iota == 5760
        assert cfg.detector.alpha_eta == 35.0
        assert cfg.detector.q_eta == 1440
        assert cfg.l_m == 10 and cfg.tau_max == 5 and cfg.alpha == 0.05
        assert cfg.use_priors and cfg.use_compression and not cfg.direct_t0

    def test_file_values(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(
            "alpha_eta = 2.0\nl_m = 12\ndirect_t0 = true\n"
            "change_points = [100.0, 200.0]\n"
        )
        cfg = load_config(path)
        assert cfg.detector.alpha_eta == 2.0
        assert cfg.detector.change_points == (100.0, 200.0)
        assert cfg.l_m == 12
        assert cfg.direct_t0 is True

    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text("tau_max = 4\n")
        cfg = load_config(path, {"tau_max": 7, "alpha": None})
        assert cfg.tau_max == 7
        assert cfg.alpha == 0.05

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text("nonsense = 1\n")
        with pytest.raises(InputError, match="unknown config keys"):
            load_config(path)

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text("= broken\n")
        with pytest.raises(InputError, match="invalid TOML"):
            load_config(path)

    def test_validation(self):
        with pytest.raises(InputError):
            PipelineConfig(l_m=0)
        with pytest.raises(InputError):
            PipelineConfig(alpha=0.0)
        with pytest.raises(InputError):
            PipelineConfig(ess=-1.0)


class TestConfigHash:
    def test_stable_and_sensitive(self):
        a = PipelineConfig()
        b = PipelineConfig()
        c = PipelineConfig(l_m=11)
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)
        assert len(config_hash(a)) == 64
