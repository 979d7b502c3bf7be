import pytest

from sispec.defaults import (
    PRESETS,
    SPECTRA_FIELDS,
    PipelineConfig,
    default_num_workers,
    parse_alphas,
)
from sispec.exceptions import ConfigError


def test_default_config():
    config = PipelineConfig()
    assert config.alphas == (0.0, 0.6, 0.8)
    assert config.k == 30
    assert config.descriptor == "wks"
    assert set(config.spectra_settings()) == set(SPECTRA_FIELDS)


def test_numbers_are_coerced():
    config = PipelineConfig(alphas=[0, 1], clip_lo_pct=1)
    assert config.alphas == (0.0, 1.0)
    assert isinstance(config.clip_lo_pct, float)


@pytest.mark.parametrize(
    "changes",
    [
        {"alphas": ()},
        {"alphas": (0.5, 1.5)},
        {"alphas": (0.6, 0.6)},
        {"alphas": "0.6"},
        {"k": 1},
        {"k": True},
        {"k": "30"},
        {"clip_lo_pct": 80.0},
        {"clip_floor": 0.0},
        {"smooth_step": 1.0},
        {"descriptor": "shot"},
        {"descriptor_step": 0},
        {
            "w_bijectivity": 0.0,
            "w_orthogonality": 0.0,
            "w_laplacian": 0.0,
            "w_descriptor": 0.0,
        },
        {"w_laplacian": -1.0},
        {"lumped_mass": 1},
        {"workers": -2},
    ],
)
def test_invalid_settings(changes):
    with pytest.raises(ConfigError):
        PipelineConfig(**changes)


def test_toml_round_trip(tmp_path):
    config = PipelineConfig(alphas=(0.5, 0.6), k=12, lumped_mass=True)
    path = tmp_path / "sispec.toml"
    path.write_text(config.to_toml())
    assert PipelineConfig.from_toml(path) == config
    assert "# eigenpairs per domain (default 30)" in config.to_toml()


def test_toml_overrides_and_errors(tmp_path):
    path = tmp_path / "sispec.toml"
    path.write_text("k = 12\nseed = 3\n")
    config = PipelineConfig.from_toml(path, seed=5)
    assert (config.k, config.seed) == (12, 5)

    path.write_text("k = 12\nnum_eigenpairs = 3\n")
    with pytest.raises(ConfigError, match="num_eigenpairs"):
        PipelineConfig.from_toml(path)
    path.write_text("k = \n")
    with pytest.raises(ConfigError):
        PipelineConfig.from_toml(path)


def test_replace_and_digest():
    config = PipelineConfig()
    assert config.digest() == PipelineConfig().digest()
    changed = config.replace(k=40)
    assert changed.k == 40 and config.k == 30
    assert changed.digest() != config.digest()
    with pytest.raises(ConfigError):
        config.replace(k=0)


def test_parse_alphas():
    assert parse_alphas("non-isometric") == PRESETS["non-isometric"]
    assert parse_alphas(" 0, 0.5 ,1") == (0.0, 0.5, 1.0)
    assert parse_alphas("") == ()
    with pytest.raises(ConfigError):
        parse_alphas("0,half")


def test_default_num_workers(monkeypatch):
    monkeypatch.delenv("SISPEC_NUM_WORKERS", raising=False)
    assert default_num_workers(3, 2) == 2
    assert default_num_workers(3, 8) == 3
    assert 1 <= default_num_workers(3) <= 3
    monkeypatch.setenv("SISPEC_NUM_WORKERS", "1")
    assert default_num_workers(3, 2) == 1
    monkeypatch.setenv("SISPEC_NUM_WORKERS", "many")
    with pytest.raises(ConfigError):
        default_num_workers(3)
