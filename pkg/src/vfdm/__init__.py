"""Vandermonde-precoded spectrum sharing over OFDM: channel model,
null-space precoder, covariance optimization and rate evaluation."""

__version__ = "0.1.0"

from .channel_model import (  # noqa: E402
    ChannelSet,
    DiagFreqChannel,
    SystemParams,
    apply_toeplitz,
    cp_insertion_matrix,
    draw_channel_set,
    frequency_response,
    toeplitz_conv_matrix,
    unitary_dft,
)
from .errors import ConditioningError, DegenerateChannelError, InvalidConfigError  # noqa: E402
from .optimizer import (  # noqa: E402
    PrimaryAllocation,
    SecondaryAllocation,
    effective_channel,
    equal_power_covariance,
    interference_noise_covariance,
    primary_min_power_for_target,
    primary_waterfilling,
    secondary_covariance,
)
from .precoder import (  # noqa: E402
    VandermondePrecoder,
    build_vandermonde,
    channel_poly_roots,
    interference_leakage,
    numerical_rank,
    precoder_for_channels,
)
from .rate_eval import (  # noqa: E402
    RateReport,
    primary_rate,
    secondary_rate_closed_form,
    secondary_rate_logdet,
)
