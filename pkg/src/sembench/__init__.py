"""Physics-based SEM defocus simulation, restoration, and metrology toolkit.

The package is organized by pipeline stage:

    image_io   load/save [0,1] float images, banner cropping
    psf        rotated elliptical Airy kernels (self-contained Bessel J1)
    degrade    forward model: blur + gain/offset + Poisson/Gaussian noise
    restore    Richardson-Lucy, Wiener, variational descent, tiling
    losses     masked/pixel/edge/frequency training objectives
    moe        mixture-of-experts routing arithmetic
    metrics    PSNR, SSIM, clustering diagnostics
    metrology  line-pattern CD/LWR/LER measurement and PSD
    cli        `sembench` benchmark orchestrator
"""

from .degrade import (
    DEFAULT_RANGES,
    DegradeParams,
    ParamRanges,
    apply_forward_model,
    convolve_reflect,
    midpoint_params,
    sample_params,
)
from .errors import ConfigError, DataError, NumericError
from .image_io import bottom_crop, load_image, save_image
from .losses import (
    LossWeights,
    MaskSpec,
    charbonnier,
    edge_loss,
    fft_loss,
    kd_loss,
    masked_l1,
    psd_loss,
    radial_psd,
    sample_mask,
    stage2_objective,
    stage3_objective,
    total_restoration_loss,
    tv_loss,
)
from .metrics import (
    calinski_harabasz,
    davies_bouldin,
    load_embeddings_csv,
    psnr,
    save_embeddings_csv,
    silhouette_cosine,
    ssim,
)
from .metrology import (
    DEFAULT_PSD_BAND,
    DetectionOptions,
    EdgeSet,
    MetrologyError,
    MetrologyReport,
    aggregate_errors,
    compare_reports,
    detect_edges,
    lwr_psd,
    measure,
    psd_summary,
)
from .moe import (
    ExpertSet,
    GateParams,
    gate,
    load_balance_loss,
    moe_forward,
    top_k_route,
)
from .psf import (
    PsfParams,
    airy_profile,
    bessel_j1,
    build_kernel,
    kernel_from_json,
    kernel_size,
    kernel_to_json,
)
from .restore import (
    RestoreConfig,
    TileSpec,
    estimate_noise_sigma,
    richardson_lucy,
    tile_grid,
    tiled_apply,
    variational_restore,
    wiener,
)
from .seeding import Seed
from .cli import PipelineConfig

__version__ = "0.1.0"
