"""
Everything around the solver: case files, forcing, heterogeneity, the Gardner
oracle, writers, the run pipeline and the command line
"""

from .case_file import CaseSpec, load_case, parse_case, render_case
from .config import Settings
from .forcing import FluxSeries, flux_at, read_flux_series, synthetic_monsoon_series
from .gardner import gardner_analytic_h, gardner_flux_bound
from .heterogeneity import lognormal_ks_field
from .writers import read_snapshot, write_probes, write_snapshot
