"""conslab: a desk-scale laboratory for conservation laws of conformally
invariant two-dimensional elliptic systems on the discretized unit disk."""

from .grid import Grid, make_grid
from .fields import (ANTISYM, Connection, GENERAL, MapField, MatField,
                     ROTATION, ScalarField, UNIT_SPHERE, VecField, exp_antisym,
                     integrate, l2_norm, matmul, matvec, sup_norm, transpose)
from .calculus import (connection_apply, curl, div, grad, jacobian, laplacian,
                       perp_grad, w12_seminorm)
from .elliptic import (SolveError, SolveReport, hodge_decompose, hminus1_norm,
                       solve_dirichlet, solve_neumann)
from .wente import WenteReport, band_limited, wente_solve, wente_sweep
from .targets import (GeometrySpec, cmc_cap_map, omega_general,
                      omega_hypersurface, omega_mean_curvature, omega_sphere,
                      residual_pde, stereo_sphere_map)
from .gauge import (GaugeError, GaugeOptions, GaugeResult, coulomb_gauge,
                    rotate_connection, verify_gauge)
from .conslaw import (ABOptions, ABResult, build_AB, conservation_residual,
                      gauge_relation_residual, regularity_demo, shatah_pair)
from .frames import (Frame, coulomb_frame, frame_conservation_residual,
                     second_derivative_report, solve_a)

__version__ = "0.1.0"
