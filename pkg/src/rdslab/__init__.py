"""Random dynamical systems on a chain of triangles, with attractor experiments.

The triangle system's discrete-time pullback attractor is disconnected with
positive probability even though the space is connected; a deterministic
double well serves as the connected control.
"""
from .doublewell import DoubleWellSystem, doublewell_flow
from .errors import (ConfigError, EmbedOverflow, IndexOverflow, RdsError, SearchExhausted, SetBlowup,
                     TailOverflow)
from .lab import (EstimateWithCI, absorption_search, connectivity_report, epsilon_components,
                  hausdorff_semidist, membership_probability, pullback_orbit, uniform_attraction_check,
                  weak_attraction_probability)
from .noise import NoisePath, shift, xi_window
from .phase import (discrete_attractor_estimate, f0t, f0t_inv, f01, fst, p0_in_Fn, p0_in_Fn_oracle,
                    phi)
from .space import Arc, LeftRay, PointCloud, Triangle, dist, embed, grid_sample
from .systems import TriangleSystem

__version__ = "0.1.0"
