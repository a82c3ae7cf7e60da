"""Pansharpening with a trous wavelet high-pass modulation, baseline methods and quality metrics."""

from .atrous import WaveletDecomposition, atrous_decompose, atrous_reconstruct, detail_sum
from .errors import DegenerateInputError, PansharpError, ParameterError, RasterIOError, StructuralError
from .fusion import (
    FusionMethod,
    FusionParams,
    fuse,
    fuse_atrous_additive,
    fuse_brovey,
    fuse_hpm_boxcar,
    fuse_ihs,
    fuse_pca,
    fuse_wavelet_hpm,
)
from .harness import EvalConfig, SyntheticScene, emit_report, run_evaluation, synth_scene, wald_degrade
from .io import load_band, load_multiband, save_band, save_multiband
from .metrics import (
    MetricsReport,
    avg_correlation,
    avg_mutual_information,
    correlation,
    mutual_information,
    q_index,
    qnr,
)
from .raster import Kernel2D, MultiBandImage, RasterBand, boxcar_filter, downsample, histogram_match, upsample

__version__ = "0.1.0"
