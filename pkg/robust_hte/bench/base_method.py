from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..core.types import Dataset, RngState
from ..pipeline import PipelineConfig


class BaseMethod(ABC):
    """An effect estimator scored by the benchmark."""

    name: str = ""

    def __init__(self, config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig.from_settings()

    @abstractmethod
    def estimate(self, ds: Dataset, rng: RngState) -> np.ndarray:
        """Per-sample effect estimates tau_hat_i (length n)."""
        pass
