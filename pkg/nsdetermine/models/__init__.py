from .common import NormReport, FormValue, CoercivityReport, ApproxInequalityReport
from .trajectory import TrajectorySample, TrajectoryRecord
from .reports import EstimateReport, GronwallVerdict, CertificationArtifact, TwinSample, TwinReport
