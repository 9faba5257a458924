"""Patience-based early stopping on the validation metric."""

from enum import Enum
from typing import Optional, Sequence

from config.errors import ContractError


class Decision(str, Enum):
    CONTINUE = "continue"
    STOP = "stop"


def early_stopper(val_history: Sequence[float], patience: int) -> Decision:
    """Stop once the best value (first occurrence) is `patience` epochs old.

    Equal values do not count as improvement.
    """
    if not val_history:
        raise ContractError("early_stopper needs a nonempty history")
    best = min(range(len(val_history)), key=lambda i: val_history[i])
    return Decision.STOP if len(val_history) - 1 - best >= patience else Decision.CONTINUE


class EarlyStopping:
    """Incremental form of `early_stopper`; epochs are counted from 1."""

    def __init__(self, patience: int = 10):
        self.patience = patience
        self.history: list[float] = []
        self.best_value: Optional[float] = None
        self.best_epoch: Optional[int] = None
        self.counter = 0

    def update(self, value: float) -> bool:
        """Record one epoch; True if it is a new best."""
        self.history.append(value)
        if self.best_value is None or value < self.best_value:
            self.best_value = value
            self.best_epoch = len(self.history)
            self.counter = 0
            return True
        self.counter += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.counter >= self.patience
