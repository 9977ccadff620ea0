"""Saddlepoint-based linear correction of mismatched L-values.

Submodules:

``llr``          channel model, exact and mismatched L-values, sampling
``cgf``          cumulant generating functions and saddlepoint solvers
``correction``   correction-factor estimators
``pep``          pairwise error probability: exact, bounds, Monte Carlo
``fec``          convolutional encoder and soft Viterbi decoder
``experiments``  sweeps, GMI lookup table, coded BER harness
"""

from .cgf import (
    Cgf,
    NoSaddlepointError,
    SaddlepointResult,
    cgf_empirical,
    cgf_gaussian,
    cgf_mismatched_llr,
    cgf_mixture,
    cgf_observation,
    cgf_sum,
    find_saddlepoint,
    observation_saddlepoint,
)
from .correction import (
    CorrectionError,
    CorrectionEstimate,
    MixturePdf,
    alpha_gauss_moment,
    alpha_gmi,
    alpha_gmi_channel,
    alpha_high_snr,
    alpha_low_snr,
    alpha_saddlepoint,
    alpha_saddlepoint_channel,
    alpha_wlsf,
)
from .experiments import BerConfig, SweepConfig, build_gmi_table, run_alpha_sweep, run_ber
from .fec import ConvCodeSpec, conv_encode, viterbi_soft, viterbi_soft_batch
from .llr import ChannelParams, LValueBatch, LValueKind, mismatched_llr, sample_llrs, true_llr
from .pep import (
    PepEstimate,
    PepQuery,
    alpha_grid_2sm,
    pep_bhattacharyya,
    pep_exact_2sm,
    pep_exact_gauss,
    pep_mc_oracle,
    pep_spa,
)

__version__ = "0.1.0"
