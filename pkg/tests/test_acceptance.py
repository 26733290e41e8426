"""The twelve acceptance criteria at their stated tolerances."""

import pytest

from latorbit import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, record_criterion):
    c = acceptance.run([number], echo=None)[0]
    record_criterion(c)
    assert c.passed, c.line()


def test_tampered_beta_constant_is_detected(monkeypatch):
    from latorbit import volume

    orig = volume.beta_constant
    monkeypatch.setattr(volume, "beta_constant", lambda m: orig(m) * (1 + 1e-6))
    assert not acceptance.c3_gamma().passed
