"""Two-photon calcium imaging analysis toolkit."""

from ._accel import USE_NUMBA, backend_name
from .intensity import (
    EqualizationReport,
    PixelStats,
    difference_map,
    frame_means,
    mean_equalize,
    mean_variance_scatter,
    pixel_stats,
    total_variance,
    variance_reduction_pct,
)
from .io import export_csv_pairs, export_csv_series, export_pgm, load_biosignal, load_stack, save_stack
from .movement import MovementSeries, framediff_series, movement_levene, shiftmag_series
from .registration import (
    AlignmentConfig,
    AlignmentResult,
    RigidTransform,
    align_stack,
    apply_rigid,
    estimate_transform,
    sse_objective,
)
from .stack import BioSignal, ImageStack, StimSchedule, frame_at, shock_times
from .stats import LeveneReport, f_cdf, f_sf, levene, regularized_incomplete_beta
from .synth import SynthConfig, SynthTruth, generate

__version__ = "0.1.0"
