"""Field solvers on characteristic lattices and shock-fitting pipelines."""

from .lattice import (CharTrace, CharLattice, goursat_solve,
                      wall_reflection_solve, cross_characteristic,
                      LatticeError)
from .hodograph import (hodograph_goursat_solve, singular_cauchy_solve,
                        CavitationWedge, InversionError, ShockBackData,
                        envelope_blowup_ratio)
from .shockfit import (FittedShock, shock_fit_post_sonic,
                       shock_fit_transonic, ShockFitError, PsiPoTable)
from .fields import (ConstantField, CenteredFanField, LatticeField,
                     CompositeField)
