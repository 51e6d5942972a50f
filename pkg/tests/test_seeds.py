import numpy as np
import pytest

from entdyn.errors import ParameterDomainError
from entdyn.seeds import (
    CONDITIONAL,
    DYSON,
    FIT,
    LANGEVIN,
    MOMENTS,
    SAMPLE,
    SCALING,
    STATIONARY,
    SWEEP,
    stream,
)


def test_same_key_same_bytes():
    a = stream(7, SWEEP, 0, 3).standard_normal(16)
    b = stream(7, SWEEP, 0, 3).standard_normal(16)
    assert np.array_equal(a, b)


def test_different_keys_differ():
    a = stream(7, SWEEP, 0, 3).standard_normal(16)
    b = stream(7, SWEEP, 0, 4).standard_normal(16)
    c = stream(8, SWEEP, 0, 3).standard_normal(16)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_purpose_tags_distinct():
    tags = [SWEEP, STATIONARY, LANGEVIN, DYSON, CONDITIONAL, SCALING, FIT, SAMPLE, MOMENTS]
    assert len(set(tags)) == len(tags)


def test_key_order_matters():
    a = stream(1, 2, 3).standard_normal(8)
    b = stream(1, 3, 2).standard_normal(8)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("bad", [(-1,), (0, -2)])
def test_negative_components_rejected(bad):
    with pytest.raises(ParameterDomainError):
        stream(*bad)
