"""Desk-scale numerics for covert communication over classical-quantum channels."""

from .operators import (
    DensityOperator,
    Spectrum,
    diagonal_state,
    dimension_cap,
    kron_power,
    make_density,
    matrix_from_json,
    matrix_inv_sqrt,
    matrix_log,
    matrix_pinv,
    matrix_power,
    matrix_to_json,
    partial_trace,
    pinching,
    spectral_decomposition,
    spectral_projection_nonneg,
    support_projector,
    tensor,
)
from .divergences import (
    chi_squared,
    helstrom_error,
    holevo_information,
    overlap_trace,
    phi_functional,
    pinsker_gap,
    psi_functional,
    relative_entropy,
    supports_contained,
    trace_distance,
    von_neumann_entropy,
)
from .channel import (
    CqChannelPair,
    Povm,
    ScenarioClass,
    ScenarioReport,
    SupportRelation,
    channel_from_json,
    classify_scenario,
    induce_dmc,
    load_channel,
    mixture_feasibility,
    support_relations,
    weak_covert_budget,
)
from .coding import (
    Codebook,
    DecoderPovm,
    ExperimentConfig,
    NogoReport,
    TrialReport,
    build_srm_decoder,
    covertness_report,
    exact_pe_bob,
    nogo_experiment,
    run_experiment,
    sample_codebook,
    select_best,
    willie_average_state,
)
from .scaling import (
    ConverseBounds,
    ExpansionCheck,
    ScalingReport,
    SqrtnLognReport,
    converse_bounds,
    expansion_check,
    key_coefficient,
    message_coefficient,
    optimize_ptilde,
    product_measurement_coefficients,
    scaling_report,
    sqrtnlogn_coefficient,
)

__version__ = "0.1.0"
