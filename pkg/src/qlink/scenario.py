"""Named scenarios: parameter bundles with validation, presets and a text format.

Scenario files are plain ``key = value`` text grouped in ``[section]``
blocks. Key names carry their unit (``_m``, ``_j``, ``_hz``, ``_ns`` ...)
and unknown sections or keys are rejected. ``dumps`` writes the canonical
form: sections and keys sorted, every key present, floats in ``repr`` form.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType

from .constants import ARCSEC, FWHM_PER_SIGMA
from .errors import ParseError, ValidationError
from .geometry import CircularOrbit, PassGeometry, tracking_rates, visibility_window
from .link_budget import OpticalChain, TargetSpec, TransmitterSpec
from .simulate import DetectorModel, ScintillationModel
from .stellar import ReceiverChain, StarSpec

SCENARIO_DIR_ENV = "QLINK_SCENARIO_DIR"
KINDS = ("pass", "ground_target", "star")

# (type, default, rule); rules: pos > 0, nonneg >= 0, unit in (0, 1], frac in [0, 1]
SCHEMA: dict[str, dict[str, tuple]] = {
    "scenario": {
        "name": (str, None, "nonempty"),
        "kind": (str, "pass", "kind"),
        "seed": (int, 0, "nonneg"),
        "epoch": (str, "2000-01-01T00:00:00Z", "nonempty"),
    },
    "orbit": {
        "altitude_m": (float, 5.9e6, "pos"),
        "body_radius_m": (float, 6.371e6, "pos"),
        "grav_parameter_m3_s2": (float, 3.986004418e14, "pos"),
        "max_elevation_deg": (float, 60.0, "elevation"),
        "min_elevation_deg": (float, 0.0, "min_elevation"),
        "track_start_s": (float, -1200.0, "finite"),
        "track_duration_s": (float, 2400.0, "pos"),
    },
    "link": {
        "range_m": (float, 6.0e6, "pos"),
        "spreading_factor": (float, 1.0, "unit"),
        # quoted spot diameters for the intercept chain; 0 derives them from divergence
        "uplink_spot_m": (float, 0.0, "nonneg"),
        "downlink_spot_m": (float, 0.0, "nonneg"),
    },
    "transmitter": {
        "pulse_energy_j": (float, 0.1, "pos"),
        "wavelength_m": (float, 532e-9, "pos"),
        "divergence_arcsec": (float, 1.0, "divergence"),
        "rep_rate_hz": (float, 10.0, "pos"),
    },
    "target": {
        "effective_diameter_m": (float, 0.6, "pos"),
        "active_retro_fraction": (float, 0.1, "unit"),
        "return_divergence_arcsec": (float, 3.0, "pos"),
        "cross_section_m2": (float, 0.0, "nonneg"),
        "n_retroreflectors": (int, 426, "nonneg"),
        "retro_diameter_m": (float, 0.038, "pos"),
    },
    "optical_chain": {
        "eta_q": (float, 1.0, "unit"),
        "eta_t": (float, 1.0, "unit"),
        "eta_r": (float, 1.0, "unit"),
        "t_a": (float, 1.0, "unit"),
        "t_c": (float, 1.0, "unit"),
        "aperture_diameter_m": (float, 1.5, "pos"),
    },
    "receiver": {
        "aperture_area_cm2": (float, 1700.0, "pos"),
        "mirror_reflectivities": (list, [0.70], "unit_list"),
        "bandwidth_angstrom": (float, 800.0, "pos"),
        "qe_fiber": (float, 0.1, "unit"),
        "extra_optics": (float, 0.29, "unit"),
        "atmospheric_transmission": (float, 0.7, "unit"),
        "pinhole_coupling": (float, 1.0, "unit"),
        "sky_background_hz": (float, 0.0, "nonneg"),
        "v_magnitude": (float, 0.0, "finite"),
    },
    "detector": {
        "jitter_fwhm_ns": (float, 1.3, "nonneg"),
        "dead_time_ns": (float, 0.0, "nonneg"),
        "dark_rate_hz": (float, 0.0, "nonneg"),
    },
    "ground_target": {
        "distance_m": (float, 45.25, "pos"),
        "instrument_offset_ns": (float, 116.1, "finite"),
        "rep_rate_hz": (float, 17000.0, "pos"),
        "n_pulses": (int, 125000, "pos"),
    },
    "star": {
        "sim_rate_hz": (float, 2.0e4, "pos"),
        "duration_s": (float, 91.0, "nonneg"),
        "log_sigma": (float, 0.0, "nonneg"),
        "correlation_time_s": (float, 0.05, "pos"),
        "modulation_hz": (float, 18.0, "nonneg"),
        "modulation_depth": (float, 0.5, "frac"),
    },
    "analysis": {
        "fit_degree": (int, 60, "degree"),
        "window_ns": (float, 4 * 1.3, "pos"),
        "offset_bin_ns": (float, 0.1, "pos"),
        "count_bin_s": (float, 0.01, "pos"),
        "snr_threshold": (float, 20.0, "snr"),
        "mount_az_rate_deg_s": (float, 20.0, "pos"),
        "mount_el_rate_deg_s": (float, 5.0, "pos"),
    },
}


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    severity: str = "error"  # or "warning"

    def __str__(self):
        return f"{self.severity}: {self.field}: {self.rule}"


def _defaults() -> dict[str, dict]:
    return {sec: {k: v[1] for k, v in keys.items()} for sec, keys in SCHEMA.items()}


def _merge(base: dict, overrides: dict) -> dict:
    out = {sec: dict(vals) for sec, vals in base.items()}
    unknown = [f"{sec}.{k}" for sec, vals in overrides.items()
               for k in (vals if sec in out else [None])
               if sec not in out or k not in SCHEMA[sec]]
    if unknown:
        raise ParseError("unknown key", None, unknown[0])
    for sec, vals in overrides.items():
        out[sec].update(vals)
    return out


PRESETS: dict[str, dict] = {
    "lageos-mlro": {
        "scenario": {"name": "lageos-mlro", "kind": "pass", "seed": 1},
        "link": {"downlink_spot_m": 100.0},
    },
    "ground-target-c": {
        "scenario": {"name": "ground-target-c", "kind": "ground_target", "seed": 1},
        "transmitter": {"rep_rate_hz": 17000.0},
        "ground_target": {"distance_m": 45.25},
    },
    "ground-target-b": {
        "scenario": {"name": "ground-target-b", "kind": "ground_target", "seed": 1},
        "transmitter": {"rep_rate_hz": 17000.0},
        "ground_target": {"distance_m": 192.47},
    },
    "vega-mlro": {
        "scenario": {"name": "vega-mlro", "kind": "star", "seed": 1},
    },
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """Validated parameter bundle; ``values[section][key]`` in the file's units.

    ``values`` is frozen into read-only mappings (lists become tuples).
    """

    values: dict

    def __post_init__(self):
        frozen = {sec: MappingProxyType({k: tuple(v) if isinstance(v, list) else v
                                         for k, v in vals.items()})
                  for sec, vals in self.values.items()}
        object.__setattr__(self, "values", MappingProxyType(frozen))

    def to_dict(self) -> dict:
        """Plain mutable copy, suitable for editing and rebuilding."""
        return {sec: {k: list(v) if isinstance(v, tuple) else v for k, v in vals.items()}
                for sec, vals in self.values.items()}

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.values == other.values

    def __getitem__(self, section):
        return self.values[section]

    @property
    def name(self) -> str:
        return self.values["scenario"]["name"]

    @property
    def kind(self) -> str:
        return self.values["scenario"]["kind"]

    @property
    def seed(self) -> int:
        return self.values["scenario"]["seed"]

    @property
    def epoch(self) -> str:
        return self.values["scenario"]["epoch"]

    def orbit(self) -> CircularOrbit:
        o = self["orbit"]
        return CircularOrbit(o["altitude_m"], o["body_radius_m"], o["grav_parameter_m3_s2"])

    def pass_geometry(self) -> PassGeometry:
        return PassGeometry(self.orbit(), math.radians(self["orbit"]["max_elevation_deg"]))

    def track_window(self) -> tuple[float, float]:
        o = self["orbit"]
        return o["track_start_s"], o["track_start_s"] + o["track_duration_s"]

    def transmitter(self) -> TransmitterSpec:
        t = self["transmitter"]
        return TransmitterSpec(t["pulse_energy_j"], t["wavelength_m"],
                               t["divergence_arcsec"] * ARCSEC, t["rep_rate_hz"])

    def target(self) -> TargetSpec:
        t = self["target"]
        return TargetSpec(t["effective_diameter_m"], t["active_retro_fraction"],
                          t["return_divergence_arcsec"] * ARCSEC,
                          t["cross_section_m2"] or None)

    def optical_chain(self) -> OpticalChain:
        c = self["optical_chain"]
        return OpticalChain(c["eta_q"], c["eta_t"], c["eta_r"], c["t_a"], c["t_c"])

    def quoted_spots(self) -> tuple[float | None, float | None]:
        """(uplink, downlink) spot diameters in m, None where derived from divergence."""
        lk = self["link"]
        return lk["uplink_spot_m"] or None, lk["downlink_spot_m"] or None

    def aperture_area(self) -> float:
        return math.pi * self["optical_chain"]["aperture_diameter_m"] ** 2 / 4.0

    def receiver_chain(self) -> ReceiverChain:
        r = self["receiver"]
        return ReceiverChain(r["aperture_area_cm2"], tuple(r["mirror_reflectivities"]),
                             r["bandwidth_angstrom"], r["qe_fiber"], r["extra_optics"],
                             r["atmospheric_transmission"], r["pinhole_coupling"],
                             r["sky_background_hz"])

    def star(self) -> StarSpec:
        return StarSpec(self["receiver"]["v_magnitude"])

    def detector(self) -> DetectorModel:
        d = self["detector"]
        return DetectorModel.from_fwhm_ns(d["jitter_fwhm_ns"], d["dead_time_ns"],
                                          d["dark_rate_hz"])

    def scintillation(self) -> ScintillationModel:
        s = self["star"]
        return ScintillationModel(s["log_sigma"], s["correlation_time_s"])

    def modulation(self):
        s = self["star"]
        if s["modulation_depth"] == 0:
            return None
        return (s["modulation_hz"], s["modulation_depth"])

    @property
    def jitter_sigma_ns(self) -> float:
        return self["detector"]["jitter_fwhm_ns"] / FWHM_PER_SIGMA


def _check_rule(value, rule) -> str | None:
    if rule == "nonempty":
        return None if value else "must be non-empty"
    if rule == "kind":
        return None if value in KINDS else f"must be one of {', '.join(KINDS)}"
    if rule == "unit_list":
        if not value:
            return "must list at least one value"
        bad = [v for v in value if not 0 < v <= 1]
        return f"each value must be in (0, 1], got {bad[0]}" if bad else None
    if not math.isfinite(value):
        return "must be finite"
    checks = {
        "pos": (value > 0, "must be > 0"),
        "nonneg": (value >= 0, "must be >= 0"),
        "unit": (0 < value <= 1, "must be in (0, 1]"),
        "frac": (0 <= value <= 1, "must be in [0, 1]"),
        "finite": (True, ""),
        "elevation": (0 < value <= 90, "must be in (0, 90] deg"),
        "min_elevation": (0 <= value < 90, "must be in [0, 90) deg"),
        "divergence": (value > 0, "must be > 0"),
        "degree": (0 <= value <= 60, "must be in [0, 60]"),
        "snr": (value > 1, "must be > 1"),
    }
    ok, msg = checks[rule]
    return None if ok else msg


def validate_scenario(s: Scenario) -> list[Violation]:
    """Every broken invariant as a Violation; station-capability limits are warnings."""
    out = []
    for sec, keys in SCHEMA.items():
        for key, (_, _, rule) in keys.items():
            msg = _check_rule(s.values[sec][key], rule)
            if msg:
                out.append(Violation(f"{sec}.{key}", msg))
    if out:
        return out

    div = s["transmitter"]["divergence_arcsec"]
    if not 1.0 <= div <= 20.0:
        out.append(Violation("transmitter.divergence_arcsec",
                             "outside 1-20 arcsec station range", "warning"))
    o = s["orbit"]
    if o["min_elevation_deg"] >= o["max_elevation_deg"]:
        out.append(Violation("orbit.min_elevation_deg", "must be below max_elevation_deg"))
    elif s.kind == "pass":
        pg = s.pass_geometry()
        lo, hi = visibility_window(pg, math.radians(o["min_elevation_deg"]))
        t0, t1 = s.track_window()
        if t0 < lo - 1e-6 or t1 > hi + 1e-6:
            out.append(Violation("orbit.track_start_s",
                                 f"track window [{t0:g}, {t1:g}] s leaves the visibility "
                                 f"window [{lo:.1f}, {hi:.1f}] s"))
        else:
            # rates peak at culmination; an overhead pass flips azimuth there (keyhole)
            a = s["analysis"]
            limits = (math.radians(a["mount_az_rate_deg_s"]), math.radians(a["mount_el_rate_deg_s"]))
            if not tracking_rates(pg, 0.0, limits=limits).trackable:
                out.append(Violation("analysis.mount_az_rate_deg_s",
                                     "pass exceeds the mount tracking rates", "warning"))
    return out


def _format_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps(s: Scenario) -> str:
    """Canonical text: sorted sections, sorted keys, every key written."""
    lines = []
    for sec in sorted(s.values):
        if lines:
            lines.append("")
        lines.append(f"[{sec}]")
        for key in sorted(s.values[sec]):
            lines.append(f"{key} = {_format_value(s.values[sec][key])}")
    return "\n".join(lines) + "\n"


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps(s), encoding="utf-8")


def _convert(typ, raw, lineno, field):
    try:
        if typ is str:
            return raw
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise ParseError(f"cannot read {raw!r} as {typ.__name__}", lineno, field) from None


def loads(text: str) -> Scenario:
    """Parse scenario text, fill defaults, and validate; raises ParseError/ValidationError."""
    overrides: dict[str, dict] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError(f"bad section header {stripped!r}", lineno)
            section = stripped[1:-1].strip()
            if section not in SCHEMA:
                raise ParseError("unknown section", lineno, section)
            overrides.setdefault(section, {})
            continue
        key, sep, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ParseError(f"expected 'key = value', got {stripped!r}", lineno)
        if section is None:
            raise ParseError("key outside any section", lineno, key)
        field = f"{section}.{key}"
        if key not in SCHEMA[section]:
            raise ParseError("unknown key", lineno, field)
        if key in overrides[section]:
            raise ParseError("duplicate key", lineno, field)
        overrides[section][key] = _convert(SCHEMA[section][key][0], raw, lineno, field)
    if "name" not in overrides.get("scenario", {}):
        raise ParseError("missing required key", None, "scenario.name")
    return build_scenario(overrides)


def build_scenario(overrides: dict) -> Scenario:
    s = Scenario(_merge(_defaults(), overrides))
    errors = [v for v in validate_scenario(s) if v.severity == "error"]
    if errors:
        raise ValidationError(errors)
    return s


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise KeyError(name)
    return build_scenario(PRESETS[name])


def load_scenario(path_or_name) -> Scenario:
    """Load a preset by name, a file by path, or ``<name>.ini`` from the scenario directory."""
    key = str(path_or_name)
    if key in PRESETS:
        return preset(key)
    candidates = [Path(key)]
    env_dir = os.environ.get(SCENARIO_DIR_ENV)
    if env_dir:
        candidates += [Path(env_dir) / key, Path(env_dir) / f"{key}.ini"]
    for p in candidates:
        if p.is_file():
            try:
                text = p.read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                raise ParseError(f"cannot read {p}: {exc}") from exc
            return loads(text)
    raise ParseError(f"scenario {key!r} not found (not a preset or a readable file)")
