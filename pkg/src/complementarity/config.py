"""INI-style run configuration with explicit units.

Example::

    [setup]
    wavelength = 670nm
    index = 1.51
    beta = 7.5e-3rad

    [grating]
    slit_widths = 20um, 50um, 70um, 80um

Unknown sections or keys are rejected. ``emit_config`` writes every value
in exact SI form so that ``parse_config(emit_config(c)) == c``.
"""

import configparser
from decimal import Decimal, InvalidOperation
from dataclasses import dataclass

from .experiment import MODES, Campaign
from .photon_stats import DetectorModel, SourceModel
from .units import (
    UnitError,
    format_quantity,
    parse_angle,
    parse_frequency,
    parse_length,
    parse_time,
)
from .wave_optics import OpticalSetup

FORMATS = ("csv", "json")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    campaign: Campaign
    output_dir: str = "out"
    formats: tuple = FORMATS
    verbosity: int = 0
    hbt_triggers: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "formats", tuple(self.formats))
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        if self.hbt_triggers < 10_000:
            raise ConfigError("hbt triggers must be at least 1e4")


def _plain(text):
    return float(text)


def _integer(text):
    # Decimal keeps 64-bit seeds exact and still accepts "1e6"
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"expected an integer, got {text!r}") from None
    if not value.is_finite() or value != value.to_integral_value():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _list(parse):
    return lambda text: tuple(parse(item) for item in text.split(",") if item.strip())


# section -> key -> (parser, required)
SCHEMA = {
    "setup": {
        "wavelength": (parse_length, True),
        "index": (_plain, True),
        "beta": (parse_angle, True),
        "period_override": (parse_length, False),
    },
    "grating": {
        "slit_widths": (_list(parse_length), False),
        "slit_count": (_integer, False),
    },
    "scan": {
        "x_step": (parse_length, False),
        "bin_time": (parse_time, False),
        "periods": (_plain, False),
    },
    "source": {
        "repetition_rate": (parse_frequency, False),
        "emission_probability": (_plain, False),
        "background_mean": (_plain, False),
        "collection_efficiency": (_plain, False),
    },
    "detector": {
        "dark_rate": (parse_frequency, False),
        "quantum_efficiency": (_plain, False),
        "acceptance_halfwidth": (_plain, False),
    },
    "run": {
        "seed": (_integer, False),
        "mode": (str, False),
        "output_dir": (str, False),
        "formats": (_list(str.strip), False),
        "verbosity": (_integer, False),
        "hbt_triggers": (_integer, False),
    },
}


def parse_config_values(text):
    """``{(section, key): value}`` for the keys present in ``text``."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if parser.defaults():
        raise ConfigError("a [DEFAULT] section is not supported")
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            raw = raw.strip()
            if not raw:
                continue
            try:
                values[section, key] = SCHEMA[section][key][0](raw)
            except (UnitError, ValueError) as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return values


def build_config(values):
    """RunConfig from a ``{(section, key): value}`` mapping of parsed values."""
    for section, keys in SCHEMA.items():
        for key, (_, required) in keys.items():
            if required and (section, key) not in values:
                raise ConfigError(f"missing required key {key!r} in [{section}]")
    get = values.get
    try:
        setup = OpticalSetup(get(("setup", "wavelength")), get(("setup", "index")),
                             get(("setup", "beta")))
        source_defaults, detector_defaults = SourceModel(), DetectorModel()
        source = SourceModel(
            get(("source", "repetition_rate"), source_defaults.repetition_rate_hz),
            get(("source", "emission_probability"), source_defaults.emission_probability),
            get(("source", "background_mean"), source_defaults.background_mean),
            get(("source", "collection_efficiency"), source_defaults.collection_efficiency),
        )
        detectors = DetectorModel(
            get(("detector", "dark_rate"), detector_defaults.dark_rate_hz),
            get(("detector", "quantum_efficiency"), detector_defaults.quantum_efficiency),
            get(("detector", "acceptance_halfwidth"), detector_defaults.acceptance_halfwidth),
        )
        defaults = Campaign(setup)
        mode = get(("run", "mode"), defaults.mode)
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        campaign = Campaign(
            setup,
            slit_widths_m=get(("grating", "slit_widths"), defaults.slit_widths_m),
            slit_count=get(("grating", "slit_count"), defaults.slit_count),
            x_step_m=get(("scan", "x_step"), defaults.x_step_m),
            bin_time_s=get(("scan", "bin_time"), defaults.bin_time_s),
            scan_periods=get(("scan", "periods"), defaults.scan_periods),
            source=source,
            detectors=detectors,
            seed=get(("run", "seed"), defaults.seed),
            mode=mode,
            period_override_m=get(("setup", "period_override")),
        )
        return RunConfig(
            campaign,
            output_dir=get(("run", "output_dir"), "out"),
            formats=get(("run", "formats"), FORMATS),
            verbosity=get(("run", "verbosity"), 0),
            hbt_triggers=get(("run", "hbt_triggers"), 1_000_000),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text):
    return build_config(parse_config_values(text))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def emit_config(config):
    c = config.campaign
    s, src, det = c.setup, c.source, c.detectors
    lines = [
        "[setup]",
        f"wavelength = {format_quantity(s.wavelength_m, 'm')}",
        f"index = {s.refractive_index!r}",
        f"beta = {format_quantity(s.summit_angle_rad, 'rad')}",
    ]
    if c.period_override_m is not None:
        lines.append(f"period_override = {format_quantity(c.period_override_m, 'm')}")
    lines += [
        "",
        "[grating]",
        "slit_widths = " + ", ".join(format_quantity(a, "m") for a in c.slit_widths_m),
        f"slit_count = {c.slit_count}",
        "",
        "[scan]",
        f"x_step = {format_quantity(c.x_step_m, 'm')}",
        f"bin_time = {format_quantity(c.bin_time_s, 's')}",
        f"periods = {c.scan_periods!r}",
        "",
        "[source]",
        f"repetition_rate = {format_quantity(src.repetition_rate_hz, 'Hz')}",
        f"emission_probability = {src.emission_probability!r}",
        f"background_mean = {src.background_mean!r}",
        f"collection_efficiency = {src.collection_efficiency!r}",
        "",
        "[detector]",
        f"dark_rate = {format_quantity(det.dark_rate_hz, 'Hz')}",
        f"quantum_efficiency = {det.quantum_efficiency!r}",
        f"acceptance_halfwidth = {det.acceptance_halfwidth!r}",
        "",
        "[run]",
        f"seed = {c.seed}",
        f"mode = {c.mode}",
        f"output_dir = {config.output_dir}",
        f"formats = {', '.join(config.formats)}",
        f"verbosity = {config.verbosity}",
        f"hbt_triggers = {config.hbt_triggers}",
        "",
    ]
    return "\n".join(lines)
