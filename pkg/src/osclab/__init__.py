"""Numerical laboratory for quantitative John-Nirenberg estimates on dyadic
grids."""

from .errors import OscLabError
from .grid import (CellFunction, CellMeasure, DisjointFamily, DyadicCube,
                   Grid, cube_average, cube_mass, estimate_doubling,
                   subcube_alpha)
from .young import (YoungFunction, check_submultiplicative, growth_bounds,
                    plog, plog_alt, power, young_inverse)
from .norms import ExponentFunction, LocalNormSpec, local_norm
from .oscillation import (bmo_norm, cz_decompose, jn_tail, oscillation,
                          sparse_dominate, sup_localized_oscillation,
                          truncate)
from .functionals import (CubeFunctional, ainfty_char_profile,
                          embedding_constant, fujii_wilson, local_maximal,
                          sd_check, wr_value)
from .constants import (Bijection, JNParams, laplace_bound, orlicz_constant,
                        theorem_constant, variable_jn_constant)

__all__ = [
    'OscLabError', 'CellFunction', 'CellMeasure', 'DisjointFamily',
    'DyadicCube', 'Grid', 'cube_average', 'cube_mass', 'estimate_doubling',
    'subcube_alpha', 'YoungFunction', 'check_submultiplicative',
    'growth_bounds', 'plog', 'plog_alt', 'power', 'young_inverse',
    'ExponentFunction', 'LocalNormSpec', 'local_norm', 'bmo_norm',
    'cz_decompose', 'jn_tail', 'oscillation', 'sparse_dominate',
    'sup_localized_oscillation', 'truncate', 'CubeFunctional',
    'ainfty_char_profile', 'embedding_constant', 'fujii_wilson',
    'local_maximal', 'sd_check', 'wr_value', 'Bijection', 'JNParams',
    'laplace_bound', 'orlicz_constant', 'theorem_constant',
    'variable_jn_constant']

__version__ = '0.1.0'
