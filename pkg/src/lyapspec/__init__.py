"""Lyapunov spectra of rational maps: pressure, Legendre spectra, graph-directed subsystems,
conformal measures and irregular-orbit schedules."""
from .errors import (ConfigError, InvalidMapError, LyapspecError, NumericDegradation, OrbitEscape,
                     PreconditionError, SearchFailure)
from .maps import (RationalMap, critical_points, critical_values, detect_exceptional, fixed_points,
                   preimages_with_flags)
from .orbits import (OrbitTrace, backward_orbit, conical_probe, hyperbolic_times, pliss_bound,
                     pullback_census, trace_orbit)
from .pressure import (PressureCurve, SpectrumCurve, bowen_root, duality_check, legendre_spectrum,
                       periodic_points, periodic_pressure, pressure_curve, tree_pressure)
from .gds import (Disk, GdsSystem, bridge, convergence_report, loop_system, refine, subsystem_pressure,
                  subsystem_spectrum, validate_gds)
from .conformal import estimate_conformal, jacobian_residual, pointwise_dim_bound
from .wmeasure import build_schedule, subsystem_stats, synthesize_trace, verify_oscillation

__version__ = "0.1.0"
