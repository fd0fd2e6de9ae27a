import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from complementarity import REFERENCE_SETUP, make_setup
from complementarity.config import (
    ConfigError,
    RunConfig,
    emit_config,
    load_config,
    parse_config,
)
from complementarity.experiment import Campaign
from complementarity.photon_stats import DetectorModel, SourceModel

MINIMAL = """
[setup]
wavelength = 670nm
index = 1.51
beta = 7.5mrad
"""


def test_minimal_config_uses_defaults():
    config = parse_config(MINIMAL)
    c = config.campaign
    assert c.setup == make_setup(**REFERENCE_SETUP)
    assert c.slit_widths_m == (20e-6, 50e-6, 70e-6, 80e-6)
    assert c.x_step_m == 4e-6 and c.bin_time_s == 3.0
    assert c.source == SourceModel() and c.detectors == DetectorModel()
    assert config.output_dir == "out"


def test_full_config():
    text = MINIMAL + """
[grating]
slit_widths = 20um, 0.05mm
slit_count = 12

[scan]
x_step = 2um
bin_time = 500ms
periods = 3

[source]
repetition_rate = 2MHz
emission_probability = 0.05

[detector]
dark_rate = 1kHz

[run]
seed = 42
mode = analytic
formats = json
"""
    config = parse_config(text)
    c = config.campaign
    assert c.slit_widths_m == (2e-5, 5e-5)
    assert c.slit_count == 12 and c.x_step_m == 2e-6 and c.bin_time_s == 0.5
    assert c.source.repetition_rate_hz == 2e6 and c.detectors.dark_rate_hz == 1000.0
    assert c.seed == 42 and c.mode == "analytic" and config.formats == ("json",)


@pytest.mark.parametrize("extra, message", [
    ("[grating]\nwidths = 20um\n", "widths"),
    ("[optics]\nfoo = 1\n", "optics"),
    ("[run]\nmode = guess\n", "mode"),
    ("[grating]\nslit_widths = 20\n", "unit"),
    ("[grating]\nslit_widths = 200um\n", "slit width"),
])
def test_invalid_configs(extra, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(MINIMAL + extra)


def test_missing_required_key():
    with pytest.raises(ConfigError, match="wavelength"):
        parse_config("[setup]\nindex = 1.5\nbeta = 0.01\n")


def test_round_trip_defaults(tmp_path):
    config = parse_config(MINIMAL)
    text = emit_config(config)
    assert parse_config(text) == config
    path = tmp_path / "run.ini"
    path.write_text(text)
    assert load_config(path) == config


widths = st.lists(st.floats(min_value=0.0, max_value=87e-6), min_size=1, max_size=5)


@settings(max_examples=60, deadline=None)
@given(widths, st.integers(1, 200), st.floats(1e-7, 1e-5), st.floats(1e-3, 100.0),
       st.integers(0, 2**63), st.floats(0.0, 1.0), st.floats(0.0, 1e4),
       st.sampled_from(["analytic", "monte_carlo", "both"]))
def test_round_trip_property(slit_widths, count, step, bin_time, seed, p, dark, mode):
    campaign = Campaign(make_setup(**REFERENCE_SETUP), slit_widths_m=slit_widths,
                        slit_count=count, x_step_m=step, bin_time_s=bin_time, seed=seed,
                        mode=mode, source=SourceModel(emission_probability=p),
                        detectors=DetectorModel(dark_rate_hz=dark))
    config = RunConfig(campaign, output_dir="results", formats=("json",), verbosity=2)
    assert parse_config(emit_config(config)) == config


def test_integers_are_exact():
    config = parse_config(MINIMAL + "[run]\nseed = 18446744073709551615\nhbt_triggers = 2e6\n")
    assert config.campaign.seed == 2**64 - 1
    assert config.hbt_triggers == 2_000_000
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "[run]\nseed = 1.5\n")
