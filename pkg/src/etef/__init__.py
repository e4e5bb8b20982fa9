"""Endurance time excitation functions synthesized in a reduced wavelet space."""

from .pso import ConvergenceLog, Seeding, SwarmConfig, cca_multiplier, run
from .signal import (
    AccelTimeSeries,
    BandLayout,
    DecisionVector,
    decode,
    dwt_forward,
    dwt_inverse,
    encode,
    read_accelerogram,
    write_accelerogram,
)
from .spectra import (
    DesignSpectrum,
    DesignSpectrumParams,
    FlatSpectrum,
    PeriodGrid,
    SpectrumGrid,
    TargetSpec,
    TimeGrid,
    objective,
    running_spectrum,
    target_grid,
)
from .synthesis import EtefProblem, generate_etef, record_seeding, synthetic_record_bank
from .validation import (
    BoucWenParams,
    MdofModel,
    default_three_story,
    extract_edps,
    mdof_simulate,
    natural_periods,
    scale_to_intensity,
)

__version__ = "0.1.0"
