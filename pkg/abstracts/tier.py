from abc import ABC, abstractmethod
from typing import Optional

from models.dataset import Dataset
from models.hyperparams import Hyperparams, LinearModel
from models.trace import Tier, TrainTrace


class TierSimulator(ABC):
    """Abstract base class for one fidelity tier.

    Every tier trains the same linear model on the same data order and
    initial condition, and reports weights and losses at epoch boundaries.
    """

    @property
    @abstractmethod
    def tier(self) -> Tier:
        """The fidelity level this simulator implements."""
        pass

    @abstractmethod
    def train(
        self,
        dataset: Dataset,
        hp: Hyperparams,
        model0: Optional[LinearModel] = None,
    ) -> TrainTrace:
        """Train on the dataset's training split.

        Args:
            dataset: Data with a fixed train/test partition
            hp: Hyperparameters of the run
            model0: Initial model, zero weights when omitted

        Returns:
            TrainTrace: one row per epoch

        Raises:
            DivergenceError: If the weights leave the divergence guard
        """
        pass
