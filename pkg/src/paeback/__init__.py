"""paeback: estimate how many of the most recent observations a time-series
forecast actually needs to match full-history accuracy.

The package covers the whole pipeline: data ingestion and error criteria
(``series``), AR estimation/forecasting/simulation (``ar``), the closed-form
large-sample theory behind the optimal development size (``asymptotics``),
penalized order selection with sliding-window tuning (``order_select``),
dual-efficiency sweeps and Monte Carlo studies (``engine``), and a CLI
(``cli``). Hot numerical kernels live in a compiled extension with a pure
NumPy fallback (``paeback._backend``).
"""

from ._backend import BACKEND as _BACKEND
from .ar import ARModel, SimSpec, Tar1, forecast, is_stationary, simulate, yule_walker_fit
from .asymptotics import (
    AsymptoticReport,
    IrrelevancySpec,
    ab_ratio,
    asymptotic_rp,
    estimate_ab_ratio,
    optimal_k,
)
from .engine import (
    EfficiencyCurve,
    StudyConfig,
    efficiency_curve,
    fukuchi_baseline,
    monte_carlo_study,
    select_optimal_k,
)
from .errors import ConvergenceError, DataError, FitError, PaebackError
from .order_select import (
    PenaltySpec,
    adaptive_weights,
    build_design,
    fit_adaptive_elastic_net,
    fit_adaptive_lasso,
    monotone_adjust,
    tune_sw,
)
from .series import Criterion, TimeSeries, SplitSpec, evaluate, load_csv, log_return

__version__ = "0.1.0"


def backend_name() -> str:
    """Which numerical backend is active: 'compiled' or 'python'."""
    return _BACKEND
