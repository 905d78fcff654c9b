import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qswitch.model import (
    MAX_LINKS,
    PolicyParams,
    SwitchConfig,
    ValidationError,
    rate_from_slot,
    validate_config,
)


def test_valid_pair_is_returned_unchanged():
    cfg, pol = SwitchConfig(3, 1.0, 0.0, 1), PolicyParams(0, 1, 1)
    assert validate_config(cfg, pol) == (cfg, pol)


@pytest.mark.parametrize(
    "cfg, pol, message",
    [
        (SwitchConfig(2, 1.0, 0.0, 1), PolicyParams(0, 0, 0), "k >= 3"),
        (SwitchConfig(3, 1.0, 0.0, 2), PolicyParams(0.5, 1, 1), "r1 must be 0 for B=2"),
        (SwitchConfig(3, 0.0, 0.0, 1), PolicyParams(0, 1, 1), "mu"),
        (SwitchConfig(3, -1.0, 0.0, 1), PolicyParams(0, 1, 1), "mu"),
        (SwitchConfig(3, 1.0, -0.1, 1), PolicyParams(0, 1, 1), "alpha"),
        (SwitchConfig(3, 1.0, 0.0, 3), PolicyParams(0, 1, 1), "buffer_size"),
        (SwitchConfig(3, 1.0, 0.0, 1), PolicyParams(0, 1.5, 1), "r2"),
        (SwitchConfig(3, 1.0, 0.0, 1), PolicyParams(-0.1, 1, 1), "r1"),
        (SwitchConfig(3.5, 1.0, 0.0, 1), PolicyParams(0, 1, 1), "integer"),
        (SwitchConfig(MAX_LINKS + 1), PolicyParams(0, 1, 1), "k <="),
        (SwitchConfig(3, math.inf), PolicyParams(0, 1, 1), "mu"),
    ],
)
def test_invalid_inputs_name_the_failed_invariant(cfg, pol, message):
    with pytest.raises(ValidationError, match=message):
        validate_config(cfg, pol)


def test_r1_zero_is_fine_for_buffer_two():
    validate_config(SwitchConfig(3, 1.0, 0.0, 2), PolicyParams(0, 0.3, 0.7))


def test_policy_parse():
    assert PolicyParams.parse("0, 1,0.25") == PolicyParams(0.0, 1.0, 0.25)
    with pytest.raises(ValidationError):
        PolicyParams.parse("0,1")
    with pytest.raises(ValidationError):
        PolicyParams.parse("a,b,c")


@pytest.mark.parametrize("tau, p, expected", [(1, 1, 1), (0.001, 0.01, 10), (2, 0.5, 0.25)])
def test_rate_from_slot(tau, p, expected):
    assert rate_from_slot(tau, p) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("tau, p", [(0, 0.5), (-1, 0.5), (1, 0), (1, 1.2)])
def test_rate_from_slot_rejects(tau, p):
    with pytest.raises(ValidationError):
        rate_from_slot(tau, p)


probabilities = st.floats(0, 1)


@given(
    k=st.integers(3, MAX_LINKS),
    mu=st.floats(1e-6, 1e6),
    alpha=st.floats(0, 1e3),
    b=st.sampled_from([1, 2]),
    r=st.tuples(probabilities, probabilities, probabilities),
)
def test_validation_is_idempotent(k, mu, alpha, b, r):
    r1 = r[0] if b == 1 else 0.0
    pair = (SwitchConfig(k, mu, alpha, b), PolicyParams(r1, r[1], r[2]))
    once = validate_config(*pair)
    assert validate_config(*once) == once == pair


@given(tau=st.floats(1e-9, 1e6), p=st.floats(1e-9, 1.0))
def test_rate_roundtrip(tau, p):
    assert rate_from_slot(tau, p) * tau / p == pytest.approx(1.0, rel=1e-15)
