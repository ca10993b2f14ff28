"""Cooperative relay-channel simulation toolkit: Asymmetric and Incomplete
decode-and-forward protocols with distributed space-time codes, relay-side
partial decoders, ML destination decoding, and outage/FER/DMT analysis."""

__version__ = "0.1.0"

from .algebra import (
    CodedElement,
    CodeSpec,
    Codeword,
    QamConstellation,
    coded_constellation,
    galois_conjugate,
    golden_code,
    golden_encode,
    make_qam,
    min_det,
    tast4_code,
    tast4_encode,
)
from .analysis import (
    FerConfig,
    OutageConfig,
    dmt_components,
    dmt_incomplete_df,
    estimate_diversity_slope,
    fer_experiment,
    outage_mc,
    wilson_interval,
)
from .channel import (
    ChannelRealization,
    EquivalentChannel,
    awgn,
    equivalent_channel,
    instantaneous_capacity,
    sample_channel,
)
from .destination import (
    RealLatticeSystem,
    build_lattice,
    ml_exhaustive,
    sphere_decode,
    sphere_search,
)
from .protocols import (
    FrameSchedule,
    ModeDecision,
    TrialOutcome,
    pick_best_relays,
    run_asymmetric_df_frame,
    run_incomplete_df_frame,
    run_naf_frame,
    run_protocol_trial,
    run_siso_frame,
    select_mode,
)
from .relay_decoders import (
    PamSearchProblem,
    cassels_decode,
    cassels_search,
    diophantine_decode_element,
    exhaustive_decode_1d,
    exhaustive_decode_pair,
    two_step_decode,
)
