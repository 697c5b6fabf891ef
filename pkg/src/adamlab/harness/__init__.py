from .config import ExperimentConfig, canonical_hash
from .experiment import RunResult, ScheduleGateError, load_run, run_experiment
from .diagnostics import as_rate_diagnostic, nonergodic_diagnostic
from .reporting import report

__all__ = [
    "ExperimentConfig",
    "canonical_hash",
    "RunResult",
    "ScheduleGateError",
    "run_experiment",
    "load_run",
    "as_rate_diagnostic",
    "nonergodic_diagnostic",
    "report",
]
