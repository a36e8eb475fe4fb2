"""Level set shape optimization with log-barrier topology constraints."""
from .barrier import BarrierEvaluation, BarrierParams, evaluate_barrier
from .contour import Contour, extract_zero_set, line_integral, nearest_contour_point
from .errors import (ConfigError, EmptyContour, LengthMismatch, NoBracket, OutOfBounds,
                     ShapesOverlap, StuckInfeasible, TooCloseToBorder, ToposhapeError,
                     UnknownPreset)
from .functionals import (AreaConstraint, CostFunctional, boundary_gradient_U, evaluate_F,
                          evaluate_G, project_constraint, restore_area)
from .grid import GridSpec, ScalarField, read_field, write_field
from .optimizer import IterationRecord, OptimizerConfig, choose_step, run, step
from .redistance import LevelSetFunction, eikonal_residual, reinitialize
from .shapes import EllipseSpec, preset, sdf_union
from .topology import TopologyReport, analyze

__version__ = "0.1.0"
