import logging

import pytest

from simultaneity.utils import EnvSettings, ensure_directories, load_env_settings, setup_logging

ENV_NAMES = ("SIMULTANEITY_LOG_LEVEL", "SIMULTANEITY_LOG_FILE", "SIMULTANEITY_WORKERS", "SIMULTANEITY_TOLERANCE_K")


@pytest.fixture
def clean_env(monkeypatch):
    # monkeypatch removes anything load_dotenv adds for these names on teardown.
    for name in ENV_NAMES:
        monkeypatch.delenv(name, raising=False)


def test_env_defaults(clean_env, tmp_path):
    assert load_env_settings(tmp_path / "absent.env") == EnvSettings()


def test_env_file_and_bad_numbers(clean_env, tmp_path):
    env = tmp_path / ".env"
    env.write_text("SIMULTANEITY_LOG_LEVEL=debug\nSIMULTANEITY_LOG_FILE=\nSIMULTANEITY_WORKERS=lots\n"
                   "SIMULTANEITY_TOLERANCE_K=3.5\n", encoding="utf-8")
    settings = load_env_settings(env)
    assert settings.log_level == "DEBUG"
    assert settings.log_file is None
    assert settings.workers == 1
    assert settings.tolerance_k == 3.5


def test_setup_logging_writes_file(tmp_path):
    log_file = tmp_path / "run.log"
    setup_logging("INFO", str(log_file))
    logging.getLogger("simultaneity.test").info("hello")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "hello" in log_file.read_text(encoding="utf-8")
    setup_logging("WARNING", None)


def test_ensure_directories(tmp_path):
    dirs = ensure_directories(tmp_path / "out", ("first", "second"))
    assert set(dirs) == {"base", "first", "second"}
    assert all(path.is_dir() for path in dirs.values())
