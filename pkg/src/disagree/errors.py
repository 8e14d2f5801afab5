"""Exception types shared across the package.

Each error carries a short machine-readable ``category`` so the CLI can
emit a single parsable failure line.
"""


class DisagreeError(Exception):
    category = "error"


class ConfigError(DisagreeError):
    category = "config"


class DataError(DisagreeError):
    category = "data"


class ModelError(DisagreeError):
    category = "model"


class ExplainerError(DisagreeError):
    category = "explainer"


class MetricError(DisagreeError):
    category = "metric"
