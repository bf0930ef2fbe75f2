"""Odd Chern character, Chern-Simons forms and CS-equivalence checks on coordinate grids."""
from . import chern, exterior, maps, matrix
from .chern import QuadratureSpec, SeriesSpec, cs, even_chern_of_projection, h_form, odd_chern, winding
from .exterior import Chart, FormField, MatrixForm, exterior_derivative, get_chart, integrate_top

__version__ = "0.1.0"
