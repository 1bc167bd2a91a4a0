"""Satellite-to-ground single-photon link simulation and time-tag analysis."""

from .analysis import (
    CoincidenceReport,
    OffsetEstimate,
    RangeFit,
    RangeObservation,
    coincidence_filter,
    estimate_instrument_offset,
    fit_tof_polynomial,
    predict_tof,
    return_rate,
)
from .counts import CountSeries, Periodogram, bin_events, detect_lines, dispersion_test, periodogram
from .geometry import (
    CircularOrbit,
    PassGeometry,
    slant_range,
    time_of_flight,
    tracking_rates,
    visibility_window,
)
from .link_budget import (
    LinkBudgetResult,
    OpticalChain,
    TargetSpec,
    TransmitterSpec,
    footprint_diameter,
    geometric_intercept,
    photons_per_pulse,
    radar_equation,
    step_chain_efficiency,
    transmitter_gain,
)
from .scenario import Scenario, load_scenario, validate_scenario
from .simulate import (
    DetectorModel,
    ScintillationModel,
    simulate_ground_target,
    simulate_pass_returns,
    simulate_star_counts,
)
from .stellar import ReceiverChain, StarSpec, expected_count_rate, pinhole_coupling_fraction
from .timetag import TimeTagStream, merge_streams, read_timetag, write_timetag

__version__ = "0.1.0"
