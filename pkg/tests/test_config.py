import pytest
from pydantic import ValidationError

from app.config import EngineConfig, load_config, parse_config_text, write_config
from app.data.models import DensityNorm, Protocol
from app.errors import ConfigError


class TestDefaults:
    def test_published_values(self, config):
        assert config.lambda_ == 0.4
        assert config.epsilon == 0.1
        assert config.margin == 1.2
        assert config.omega == 0.2
        assert config.reduction_ratio == 16
        assert (config.alpha1, config.alpha2, config.beta1, config.beta2) == (6.0, 0.5, 6.0, 0.5)
        assert (config.k1, config.k2, config.lambda_rr) == (20, 6, 0.3)
        assert config.protocol is Protocol.CROSS_CAMERA

    def test_environment_prefix(self, monkeypatch):
        monkeypatch.setenv("REID_OMEGA", "0.7")
        cfg = EngineConfig(_env_file=None)
        assert cfg.omega == 0.7


class TestValidation:
    @pytest.mark.parametrize(
        "field, value",
        [("epsilon", 1.5), ("omega", -0.1), ("kernel_size", 4), ("reduction_ratio", 0), ("lambda_rr", 2.0)],
    )
    def test_rejects_out_of_range(self, config, field, value):
        with pytest.raises(ValidationError):
            config.with_overrides(**{field: value})

    def test_k1_must_exceed_k2(self, config):
        with pytest.raises(ValidationError):
            config.with_overrides(k1=5, k2=5)

    @pytest.mark.parametrize("p, k", [(2, 1), (1, 4)])
    def test_pk_batch_needs_positive_and_negative(self, config, p, k):
        with pytest.raises(ValidationError, match="batch_p >= 2 and batch_k >= 2"):
            config.with_overrides(batch_p=p, batch_k=k)

    def test_full_batch_ignores_batch_k(self, config):
        assert config.with_overrides(batch_p=0, batch_k=1).batch_k == 1
        assert config.with_overrides(batch_p=2, batch_k=2).batch_p == 2

    def test_overrides_skip_none(self, config):
        assert config.with_overrides(omega=None, seed=3).omega == 0.2


class TestConfigFile:
    def test_parse_with_comments(self):
        values = parse_config_text("# weights\nlambda = 0.25\n\nomega=0.5  # fused\n")
        assert values == {"lambda_": "0.25", "omega": "0.5"}

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_config_text("gamma = 1\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_config_text("omega 0.5\n")

    def test_write_then_load(self, tmp_path, config):
        tuned = config.with_overrides(omega=0.35, density_norm=DensityNorm.RAW, rerank=True, lambda_=0.6)
        write_config(tmp_path / "engine.cfg", tuned)
        assert load_config(tmp_path / "engine.cfg") == tuned
