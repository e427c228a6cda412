"""AHP flood-risk mapping on raster grids, per pixel or per sub-watershed."""
from .ahp import (
    EigenResult,
    JudgmentMatrix,
    ProjectDefinition,
    build_matrix,
    consistency_gate,
    enumerate_projects,
    get_project,
    principal_eigen,
    weights_rows,
    weights_table,
)
from .errors import (
    AlignmentError,
    ClassificationError,
    ConfigurationError,
    ConvergenceError,
    DelineationError,
    DomainError,
    FloodRiskError,
    GridFormatError,
    RoutingError,
)
from .indicators import Indicator, IndicatorStack, RankedIndicator, build_stack
from .raster import GridHeader, Kind, RasterGrid, read_ascii_grid, write_ascii_grid
from .risk import ModelVariant, RiskProduct, classify_fri, compute_fri, jenks_breaks, zonal_max
from .synthetic import Motif, SyntheticTerrainSpec, generate, valley_scenario
from .terrain import TerrainProducts, derive_terrain
from .validation import FloodMask, ValidationScores, score, sweep_stability

__version__ = "0.1.0"
