"""Sparse recovery toolkit.

Recovery of sparse and compressible signals from incomplete, noisy linear
measurements: l1 and total-variation convex programs with interior-point
solvers, seeded measurement ensembles, restricted-isometry analysis,
orthonormal wavelet transforms, noise/radius models, and a reproducible
experiment harness with a CLI.
"""

from .config import EXPERIMENTS, ExperimentConfig, default_config, dump_config, \
    load_config, parse_config
from .ensembles import EnsembleSpec, coherence, generate, mutual_coherence
from .harness import ImageResult, ImageRunRecord, RipScanResult, SummaryRow, \
    TableResult, TrialRecord, read_pgm, run_constants, run_experiment, run_image, \
    run_rip_scan, run_table1, run_table2, write_pgm
from .linops import ComposedOperator, DenseOperator, DenseTransform, \
    Gradient2DOperator, IdentityTransform, MeasurementOperator, \
    PartialFourierOperator, RealFourierTransform, ScrambledFourierOperator, \
    check_orthonormal_transform, compose, load_dense, restrict_columns, save_dense
from .noisemodel import NoiseSpec, apply_noise, epsilon_gaussian, \
    epsilon_quantization, quantize
from .rip import RipEntry, RipReport, StabilityConstants, check_exact_condition, \
    check_stable_condition, delta_exhaustive, delta_sampled, measure, \
    pairwise_delta2, recovery_error_bound, stability_constants
from .rng import derived_seed, fisher_yates, sample_without_replacement, substream
from .signals import ApproxErrors, approx_errors, gen_compressible, \
    gen_sparse_spikes, gradient_sparse_image, standard_test_image, top_k
from .solvers import RecoveryProblem, SolverOptions, SolverResult, cgsolve, \
    l1_norm, oracle_ls, solve_bp, solve_bpdn, solve_tv, tv_norm
from .wavelets import DB8_SCALING, DB8_WAVELET, WaveletTransform1D, \
    WaveletTransform2D, default_levels

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
