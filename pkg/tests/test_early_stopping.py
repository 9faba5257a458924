import numpy as np
import pytest

from config.errors import ContractError
from phase4_training.early_stopping import Decision, EarlyStopping, early_stopper


def _reference_stop_epoch(history, patience):
    """Epoch (1-based) at which a patience rule first fires, or None."""
    best, best_epoch = None, 0
    for epoch, value in enumerate(history, start=1):
        if best is None or value < best:
            best, best_epoch = value, epoch
        if epoch - best_epoch >= patience:
            return epoch
    return None


def test_plateau_after_epoch_two_stops_at_epoch_twelve():
    history = [5.0, 4.0] + [4.0] * 20
    stopper = EarlyStopping(patience=10)
    for epoch, value in enumerate(history, start=1):
        stopper.update(value)
        if stopper.should_stop:
            break
    assert epoch == 12
    assert stopper.best_epoch == 2
    assert early_stopper(history[:12], 10) is Decision.STOP
    assert early_stopper(history[:11], 10) is Decision.CONTINUE


@pytest.mark.parametrize("seed", range(50))
def test_functional_and_incremental_forms_agree_with_reference(seed):
    rng = np.random.default_rng(seed)
    patience = int(rng.integers(1, 6))
    # few distinct values so ties are common
    history = rng.integers(0, 6, size=40).astype(float).tolist()
    expected = _reference_stop_epoch(history, patience)

    stopper = EarlyStopping(patience)
    stopped_at = None
    for epoch, value in enumerate(history, start=1):
        stopper.update(value)
        decision = early_stopper(history[:epoch], patience)
        assert (decision is Decision.STOP) == stopper.should_stop
        if stopper.should_stop:
            stopped_at = epoch
            break
    assert stopped_at == expected


def test_update_reports_new_best():
    stopper = EarlyStopping(patience=3)
    assert stopper.update(3.0)
    assert not stopper.update(3.0)
    assert stopper.update(2.5)
    assert stopper.best_value == 2.5 and stopper.best_epoch == 3


def test_empty_history_is_contract_error():
    with pytest.raises(ContractError):
        early_stopper([], 10)
