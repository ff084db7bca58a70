import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def three_class(rng):
    """Small labelled 3-class logit set with well separated classes."""
    means = np.array([[4.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 4.0]])
    labels = np.repeat(np.arange(3), [60, 30, 40])
    logits = means[labels] + rng.normal(0, 1.0, size=(labels.size, 3))
    return logits, labels
