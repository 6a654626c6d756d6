"""Small-cap decompositions of the parabola and cone, their sharp examples and
the numerical checks of the square-function exponents."""
from .boxgeom import OrientedBox, Tiling, comparable, dual_box, essentially_contained
from .caps import CapFamily, cone_caps, parabola_caps, sector_planks
from .extremals import ExponentQuery, predicted_exponent
from .signal import GridFunction, GridSpec

__version__ = "0.1.0"

__all__ = ["OrientedBox", "Tiling", "comparable", "dual_box", "essentially_contained",
           "CapFamily", "cone_caps", "parabola_caps", "sector_planks", "ExponentQuery",
           "predicted_exponent", "GridFunction", "GridSpec"]
