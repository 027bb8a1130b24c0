"""Middle-mile lane toolkit.

Compresses origin-destination flow geography into compact per-direction
signature features, predicts arc flows and costs from them, ranks candidate
lanes per destination, and runs a rank-weighted Thompson-sampling recommender
that learns from operator selections.
"""

from .bandit import (
    BanditState,
    ExpectedArcs,
    RecommendationRound,
    RoundReplayError,
    UnknownArcError,
    apply_feedback,
    expected_arcs,
    init_state,
    rank_drop_penalty,
    sample_round,
    update_rankpct,
)
from .dependence import (
    PdpCurve,
    direction_curves,
    direction_flow_delta,
    evaluate_curve,
    partial_dependence,
)
from .features import (
    ArcRecord,
    FeatureVector,
    FlowDataset,
    GeosigFeaturizer,
    MissingSignatureError,
    SignatureTable,
    build_design,
    build_features,
    build_signature_tables,
    feature_names,
    node_sets_from_arcs,
)
from .geometry import (
    GeoNode,
    NodeKind,
    NodeSet,
    PolarGrid,
    PolarMatrix,
    polar_matrix,
    to_polar,
)
from .hub import HubConfig, HubResult, hub_experiment
from .metrics import adjusted_r2, mape, r2
from .ranking import (
    CostPredictions,
    RankingTable,
    predict_costs,
    rank_all,
    rank_arcs,
    rank_percentile,
    write_ranking_csv,
)
from .regression import (
    GradientBoostedRegressor,
    LinearFlowRegressor,
    RegressionTree,
    load_model,
    save_model,
)
from .simulate import (
    EpisodeLog,
    OperatorPolicy,
    SyntheticNetwork,
    SyntheticNetworkConfig,
    WhatIfReport,
    generate_network,
    planted_signal_config,
    run_episode,
    state_for_network,
    whatif_new_arc,
    write_series_csv,
)
from .spectra import (
    CompressionSummary,
    Geosig,
    SpectrumMatrix,
    compression_summary,
    fft2d,
    geosig,
    ifft2d,
    magnitude_spectrum,
    power,
    rectangular_mask,
    triangular_mask,
    write_geosig_csv,
    write_pgm,
)
from .store import (
    EventLog,
    EventRecord,
    MalformedRowError,
    SchemaVersionError,
    ingest_arcs,
    read_events,
    replay,
    restore,
    snapshot,
    state_hash,
    write_arcs,
)

__version__ = "0.1.0"
