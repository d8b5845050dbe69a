"""tablegrid: recover latent table structure from table images.

The pipeline: synthetic table scans and skeletons (render), optional
skeleton degradation or external skeletons (noise), projection-based
structure estimation (xycut), genetic refinement (ga), rotation and
deskewing (deskew), and evaluation (metrics).
"""

from .model import (
    BORDER_THICKNESS,
    CANVAS,
    BinaryImage,
    ConfigError,
    DeskewError,
    EstimationError,
    GAError,
    GenotypeError,
    RasterImage,
    TableGenotype,
    TablegridError,
    ValidationResult,
    bounding_box,
    grid_positions,
    require_valid,
    scale_genotype,
    validate_genotype,
)
from .render import (
    BASE,
    BLURRY,
    BUILTIN_CONFIGS,
    LARGER_FONT,
    SHORT_CELLS,
    SMALLER_FONT,
    SOLID,
    BorderStyle,
    DatasetManifest,
    ManifestEntry,
    TableConfig,
    derive_seed,
    generate_dataset,
    render_scan,
    render_skeleton,
    sample_genotype,
    worker_count,
)
from .noise import NoiseParams, degrade, load_external
from .xycut import (
    DividerSet,
    ProjectionProfile,
    binarize,
    detect_dividers,
    estimate_structure,
    find_dividers,
    project,
    to_luminance,
)
from .ga import GAParams, crossover, evolve, fitness, has_converged, mutate, overlap_score
from .deskew import (
    SkewReport,
    crop_center,
    deskew_iterative,
    estimate_skew,
    rotate,
)
from .metrics import (
    MetricsReport,
    SweepReport,
    SweepRow,
    TableComparison,
    aggregate,
    compare,
    evaluate_manifest,
    metrics_to_csv,
    pixel_error,
    rotation_sweep,
    sweep_to_csv,
    sweep_to_svg,
)

__version__ = "0.1.0"
