"""Simulation and blow-up diagnostics for the heat flow of H-surfaces with
constant mean curvature on rectangles."""

__version__ = "0.1.0"

from .grid import Field3, GridSpec, gradient, integrate, laplacian, wedge
from .functionals import (
    EnergySnapshot,
    energy,
    gradsq,
    hsurface_residual,
    l2sq,
    lambda1,
    nehari,
    snapshot,
    supnorm,
    volume,
)
from .integrator import BlowupReport, StepperConfig, Trace, dissipation_increment, run, step
from .criteria import CriterionReport, check_criterion, monitor_trace
from .concavity import ConcavitySample, check_concavity
from .initial_data import THREE_MODE_FIXTURE, amplitude_for_criterion, mode_field
