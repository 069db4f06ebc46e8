"""Method-of-characteristics solver for steady 2D supersonic potential
flow of fluids with nonconvex (BZT) equations of state in a divergent duct."""

__version__ = "0.1.0"

from .eos import (EosModel, EosLandmarks, make_vdw_like, make_polytropic,
                  find_landmarks, sound_speed, fundamental_derivative)
from .kinematics import BernoulliContext, FlowState, InvariantRegion
