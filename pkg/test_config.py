import logging

import pytest

from src.config import ConfigManager, configure_logging, load_workloads

VARIABLES = ("SCMX_LOG", "SCMX_JOBS", "SCMX_RESULTS_DB", "SCMX_COMPUTE_NS", "SCMX_HIT_SERVICE_NS",
             "SCMX_TAG_LOOKUP_NS", "SCMX_TARGET_MARGIN")


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    for name in VARIABLES:
        monkeypatch.delenv(name, raising=False)
    return tmp_path


def test_defaults(clean_env):
    config = ConfigManager(env_file=str(clean_env / "missing.env"))
    assert config.get("app.log_level") == "info"
    assert config.get("app.jobs") >= 1
    assert config.get("hierarchy.compute_ns_per_access") == 50.0
    assert config.get("cache.tag_lookup_ns") == 20.0
    assert config.get("explorer.target_margin") == 0.10
    assert config.get("app.results_db").endswith("results.db")
    assert "~" not in config.get("app.results_db")
    assert config.get("nothing.here", "fallback") == "fallback"
    assert config.validate() == []


def test_environment_overrides(clean_env, monkeypatch):
    monkeypatch.setenv("SCMX_JOBS", "3")
    monkeypatch.setenv("SCMX_COMPUTE_NS", "80")
    monkeypatch.setenv("SCMX_LOG", "DEBUG")
    config = ConfigManager(env_file=str(clean_env / "missing.env"))
    assert config.get("app.jobs") == 3
    assert config.get("hierarchy.compute_ns_per_access") == 80.0
    assert config.get("app.log_level") == "debug"


def test_env_file(clean_env, monkeypatch):
    # registered so monkeypatch restores them after load_dotenv writes them
    monkeypatch.setenv("SCMX_TARGET_MARGIN", "")
    monkeypatch.setenv("SCMX_TAG_LOOKUP_NS", "")
    env_file = clean_env / ".env"
    env_file.write_text("SCMX_TARGET_MARGIN=0.2\nSCMX_TAG_LOOKUP_NS=35\n")
    config = ConfigManager(env_file=str(env_file))
    assert config.get("explorer.target_margin") == 0.2
    assert config.get("cache.tag_lookup_ns") == 35.0


def test_validate_reports_bad_values(clean_env, monkeypatch):
    monkeypatch.setenv("SCMX_JOBS", "many")
    monkeypatch.setenv("SCMX_TARGET_MARGIN", "1.5")
    monkeypatch.setenv("SCMX_LOG", "chatty")
    monkeypatch.setenv("SCMX_COMPUTE_NS", "0")
    problems = ConfigManager(env_file=str(clean_env / "missing.env")).validate()
    keys = sorted(p.split(":")[0] for p in problems)
    assert keys == ["app.jobs", "app.log_level", "explorer.target_margin", "hierarchy.compute_ns_per_access"]


def test_create_env_file(clean_env, monkeypatch):
    for name in VARIABLES:
        monkeypatch.setenv(name, "")
    env_file = clean_env / "generated.env"
    config = ConfigManager(env_file=str(env_file))
    config.create_env_file()
    assert "SCMX_TARGET_MARGIN=0.10" in env_file.read_text()
    assert ConfigManager(env_file=str(env_file)).validate() == []


def test_shipped_workloads():
    workloads = load_workloads()
    assert list(workloads) == ["key-value", "web-search", "media-streaming", "analytics", "web-frontend"]
    assert len({spec.seed for spec in workloads.values()}) == 5


def test_configure_logging():
    configure_logging("debug")
    assert logging.getLogger().level == logging.DEBUG
    configure_logging("info")
    with pytest.raises(ValueError):
        configure_logging("loud")
