from ._kernels import BACKEND
from .base import Classifier, ClassifierError, ClassifierFactory, NotFittedError, Prediction
from .baseline import (
    BaselineClassifier,
    BaselineConfig,
    BaselineModel,
    baseline_fit,
    objective,
    tokenize,
)
from .consistency import ConsistencyReport, consistency_check
from .external import (
    AdapterError,
    AdapterTimeout,
    ExternalClassifier,
    ProcessExitedError,
    ProtocolError,
    RemoteError,
    external_adapter,
)

__all__ = [
    "BACKEND",
    "AdapterError",
    "AdapterTimeout",
    "BaselineClassifier",
    "BaselineConfig",
    "BaselineModel",
    "Classifier",
    "ClassifierError",
    "ClassifierFactory",
    "ConsistencyReport",
    "ExternalClassifier",
    "NotFittedError",
    "Prediction",
    "ProcessExitedError",
    "ProtocolError",
    "RemoteError",
    "baseline_fit",
    "consistency_check",
    "external_adapter",
    "objective",
    "tokenize",
]
