"""Two-sample tests for multivariate cross-correlation function curves."""

from .ccf import CcfCurve, LagGrid, ccf_at_lags, ccf_curve, cross_covariance
from .comparison import ComparisonConfig, TestReport, compare_grouped, run_comparison
from .errors import CcfCompareError, DegenerateError, ValidationError
from .funcsample import (GroupedSample, MultiCurveSample, PooledCovFunction, group_mean,
                         pooled_covariance, session_curves)
from .globaltests import (PointwiseCurve, WsCalibration, bootstrap_fmax, f_int, f_max,
                          hotelling_pointwise, permutation_test, ws_calibrate, ws_pvalue)
from .ingest import (Dataset, DerivedSignals, Session, derive_acceleration, derive_signals,
                     derive_velocity, interpolate_position, read_manifest, read_session_csv)
from .query import FactorQuery
from .simulate import (GpSpec, Var1Spec, simulate_gp_sample, simulate_var1_path,
                       theoretical_var1_ccf)

__version__ = "0.1.0"
