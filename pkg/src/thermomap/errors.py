"""Tool-level exception hierarchy with stable error classes and exit codes."""


class ThermomapError(Exception):
    """Base class for all tool errors. Carries a machine-parseable class slug."""

    error_class = "error"
    exit_code = 1


class ConfigError(ThermomapError):
    """Invalid hardware config, workload file, or run configuration."""

    error_class = "config-error"
    exit_code = 2


class WorkloadSyntaxError(ConfigError):
    """Workload file is not syntactically valid (bad JSON, wrong types)."""

    error_class = "workload-syntax-error"


class WorkloadSemanticError(ConfigError):
    """Workload file violates a semantic invariant (dangling reference, duplicate)."""

    error_class = "workload-semantic-error"


class InfeasibleWorkloadError(ThermomapError):
    """Workload cannot be placed on the target hardware."""

    error_class = "infeasible-workload"
    exit_code = 3


class NonConvergenceError(ThermomapError):
    """Thermal fixed-point iteration did not converge within the sweep budget."""

    error_class = "non-convergence"
    exit_code = 4


class GuardError(ThermomapError):
    """An explicit size guard rejected the request (e.g. exhaustive search too large)."""

    error_class = "guard-violation"
    exit_code = 5
