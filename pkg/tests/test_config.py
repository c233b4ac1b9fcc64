import textwrap

import pytest

from simultaneity.config import (
    bundled_scenarios,
    load_document,
    parse_document,
    resolve_config_path,
    serialize_document,
)
from simultaneity.errors import ConfigValidationError
from simultaneity.experiment import ChoicePlacement, Mode, TimingClass, classify_timing
from simultaneity.stats import DEFAULT_CHSH_SETTINGS, chsh_pairs
from simultaneity.theories import TheoryModel

MINIMAL = textwrap.dedent("""\
    mode: single_particle
    devices:
      - {id: S, kind: source, t: 0.0, x: 0.0}
      - {id: BS, kind: beam_splitter, t: 1.0, x: 0.0}
      - {id: D-, kind: detector, port: "-", t: 9.9, x: -1.0}
      - {id: D+, kind: detector, port: "+", t: 10.0, x: 1.0, beta: 0.1}
    """)


def violations_of(text):
    with pytest.raises(ConfigValidationError) as exc:
        parse_document(text)
    return exc.value.violations


def test_bundled_scenarios_are_listed():
    names = bundled_scenarios()
    for name in ("photon_rest", "photon_moving", "photon_boundary", "chsh_qm", "chsh_ms_std", "chsh_bb",
                 "twoparticle_std", "twoparticle_bb"):
        assert name in names


@pytest.mark.parametrize("name", bundled_scenarios())
def test_bundled_scenarios_round_trip(name):
    document = load_document(name)
    again = parse_document(serialize_document(document))
    assert again == document
    assert serialize_document(again) == serialize_document(document)


@pytest.mark.parametrize("name, timing", [
    ("photon_rest", TimingClass.STANDARD_BEFORE_AFTER),
    ("photon_moving", TimingClass.BEFORE_BEFORE),
    ("photon_boundary", TimingClass.BOUNDARY),
    ("twoparticle_std", TimingClass.STANDARD_BEFORE_AFTER),
    ("twoparticle_bb", TimingClass.BEFORE_BEFORE),
    ("chsh_bb", TimingClass.BEFORE_BEFORE),
])
def test_bundled_timing(name, timing):
    assert classify_timing(load_document(name).config) is timing


def test_chsh_scenarios_use_default_settings():
    for name in ("chsh_qm", "chsh_ms_std", "chsh_bb"):
        assert list(load_document(name).settings) == chsh_pairs(DEFAULT_CHSH_SETTINGS)


def test_defaults_fill_in():
    document = parse_document(MINIMAL)
    assert document.model is TheoryModel.PREFERRED_FRAME_QM
    assert document.config.placement is ChoicePlacement.AT_DETECTOR
    assert document.config.mode is Mode.SINGLE_PARTICLE
    assert document.settings == ((0.0, 0.0),)
    assert document.trials == 1000 and document.seed == 0
    assert document.config.device("BS").reflectivity == 0.5


def test_speed_violation_points_at_its_line():
    text = MINIMAL.replace("beta: 0.1", "beta: 1.0")
    (violation,) = violations_of(text)
    assert violation.rule == "frame speed violation"
    assert violation.field == "devices[3].beta"
    assert violation.line == 6
    assert str(violation).startswith("line 6: devices[3].beta")


def test_unknown_keys_are_rejected():
    found = violations_of(MINIMAL + "colour: blue\n")
    assert [(v.field, v.rule, v.line) for v in found] == [("colour", "unknown key", 7)]
    found = violations_of(MINIMAL.replace("t: 1.0, x: 0.0}", "t: 1.0, x: 0.0, speed: 2}"))
    assert found[0].field == "devices[1].speed"
    assert found[0].line == 4


def test_bad_values_are_collected_together():
    text = MINIMAL.replace("mode: single_particle", "mode: three_particle") + "trials: many\n"
    rules = {v.rule for v in violations_of(text)}
    assert rules == {"unknown value", "trial count"}


def test_device_count_violation():
    text = "\n".join(line for line in MINIMAL.splitlines() if "D+" not in line) + "\n"
    assert "device count violation" in {v.rule for v in violations_of(text)}


def test_plan_rules_are_checked():
    rules = {v.rule for v in violations_of(MINIMAL + "trials: 0\nseed: -3\n")}
    assert rules == {"trial count", "seed range"}


def test_malformed_settings():
    (violation,) = violations_of(MINIMAL + "settings:\n  - [0.0]\n")
    assert violation.rule == "malformed setting"
    assert violation.line == 8


def test_syntax_error_has_a_line():
    (violation,) = violations_of("mode: single_particle\ndevices: [\n  {id: S\n")
    assert violation.rule == "syntax error"
    assert violation.line is not None


def test_top_level_must_be_mapping():
    assert violations_of("- 1\n- 2\n")[0].rule == "malformed document"


def test_resolve_path_or_stem(tmp_path):
    path = tmp_path / "mine.yaml"
    path.write_text(MINIMAL, encoding="utf-8")
    assert resolve_config_path(path) == path
    assert resolve_config_path("photon_rest").name == "photon_rest.yaml"
    with pytest.raises(FileNotFoundError):
        resolve_config_path(tmp_path / "missing.yaml")
    assert load_document(path).config.device("D+").beta == 0.1
