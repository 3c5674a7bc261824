"""Narrowband phased-array simulation and DoA estimation with
correlation-alignment domain adaptation."""

from .adaptation import AdaptationMap, adapt_covariance, adapt_snapshots, fit_map
from .beamforming import (Spectrum, ds_power, ds_spectrum, estimate_doa, induced_power,
                          induced_spectrum, music_power, music_spectrum, mvdr_power,
                          mvdr_spectrum, output_sir, quadratic_term_power,
                          quadratic_term_spectrum)
from .config import ScenarioConfig, load_config, load_preset, parse_config, preset_path
from .covariance import (matrix_from_json, matrix_to_json, mean_correlation,
                         reference_correlation, sample_correlation)
from .exceptions import (ConfigError, InvalidInput, NotPSD, NumericalFailure, SingularMatrix)
from .experiments import (ExperimentResult, PhaseOutput, SummaryStats, TrialResult,
                          crb_single_source, ensure_hpd, estimate_all, fit_scenario_maps,
                          make_snapshots, run_adaptation_phase, run_experiment,
                          run_operational_trials, run_reference_phase, summarize)
from .geometry import (ArrayGeometry, DirectionGrid, RectangleRegion, SectorRegion,
                       sample_positions, simulated_steering_vector, steering_matrix,
                       steering_vector, true_doa)
from .hpd import (hermitian_eig, hermitize, invert_hpd, matrix_power_half,
                  matrix_sqrt_of_product)
from .scene import (Channel, RoomSpec, Scene, SnapshotSet, gen_gaussian_signal,
                    image_method_air, image_method_airs, snapshots_from_csv,
                    snapshots_to_csv, stft_bin, synthesize_received, wall_reflection)

__version__ = "0.1.0"
