"""udarsim: bistatic OFDM micro-Doppler simulator for multi-propeller drones.

Raw baseband I/Q frames of rotating-blade and drone-body returns on a
bistatic OFDM sensing link, plus the processing chain (channel
estimation, range-Doppler maps, signature metrics) and a scenario/batch
CLI for dataset generation.
"""

from .geometry import (
    BistaticLink,
    DerivedAngles,
    GeometryError,
    PropellerGeometry,
    SPEED_OF_LIGHT,
    bistatic_angle,
    bistatic_range,
    bistatic_range_rotating_point,
    blade_azimuth_for_phase,
    compute_phi_b,
    derive_angles,
    exact_bistatic_range,
)
from .waveform import (
    OfdmConfig,
    SymbolMatrix,
    WaveformError,
    generate_symbols,
    load_symbols,
    save_symbols,
    subcarrier_angular_freqs,
    subcarrier_frequencies,
    tx_baseband_sample,
)
from .propeller import (
    BladeWindow,
    IqFrame,
    ModelError,
    PropellerReturnParams,
    SingleToneConfig,
    blade_window,
    brute_force_propeller_returns,
    classic_monostatic_returns,
    narrowband_returns,
    point_scatterer_returns,
    propeller_returns,
    psi_i,
    scatterer_amplitude,
    sinc_unnormalized,
    single_tone_hrr_returns,
)
from .drone import (
    BodyModelConfig,
    BodyModelError,
    DroneConfig,
    S21Profile,
    VibrationConfig,
    add_noise,
    gaussian_body_returns,
    measurement_body_returns,
    select_s21_profile,
    simulate_drone,
    vibration_walk,
)
from .processing import (
    MetricsUnavailableError,
    ProcessingError,
    RangeDopplerMap,
    SignatureMetrics,
    channel_estimate,
    dc_energy_fraction,
    doppler_spectrum,
    doppler_spread_law,
    expected_spike_spacing,
    extract_metrics,
    model_doppler_spread,
    pearson_correlation,
    range_doppler,
    range_profiles,
    sliding_spectrogram,
)
from .scenario import ScenarioError, load_scenario, preset_scenario, run_scenario
from .batch import BatchError, batch_generate, verify_manifest
from .storage import StorageError, load_iq, load_rdmap, save_iq, save_rdmap

__version__ = "0.1.0"
