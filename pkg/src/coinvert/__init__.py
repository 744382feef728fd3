"""Joint reconstruction of an obstacle and its excitation point sources from
Cauchy data of the 2-D Helmholtz equation on a measurement circle."""

from .decompose import (DensityPair, LayerGeometry, OperatorSystem, RegularizationResult,
                        assemble_system, eval_ui2, eval_v, solve_morozov, tikhonov_solve)
from .forward import (BoundaryCondition, CauchyData, Obstacle, ScatterSolution, add_noise,
                      eval_scattered, eval_scattered_normal_derivative, solve_scattering,
                      synthesize_cauchy)
from .geometry import (ParametricCurve, PolarGrid, QuadratureMesh, SourceSet, builtin_curve,
                       mesh, partition_sources, polar_points)
from .imaging import (FarCircle, IndicatorField, PeakSet, extract_peaks, indicator_I1,
                      indicator_I2, indicator_I2hat, indicator_IC, indicator_ID)
from .special import bessel_j, bessel_y, fundamental_solution, hankel1

__version__ = "0.1.0"
