import numpy as np
import pytest

from wavplm.filters import WaveletFilter, available_filters, get_filter


@pytest.mark.parametrize("name", ["haar", "db4", "sym8"])
def test_filter_identities(name):
    f = get_filter(name)
    h, g = f.h, f.g
    assert np.isclose(h.sum(), np.sqrt(2), atol=1e-12)
    assert np.isclose(h @ h, 1.0, atol=1e-12)
    assert np.isclose(g.sum(), 0.0, atol=1e-12)
    # double-shift orthogonality
    for k in range(1, len(h) // 2):
        assert abs(h[2 * k:] @ h[: len(h) - 2 * k]) < 1e-12
    assert abs(h @ g) < 1e-12


@pytest.mark.parametrize("name", ["db4", "sym8"])
def test_vanishing_moments(name):
    f = get_filter(name)
    k = np.arange(len(f.g))
    for m in range(f.vanishing_moments):
        assert abs(np.sum(k**m * f.g)) < 1e-6 * max(1, len(k) ** m)


def test_lookup():
    assert set(available_filters()) >= {"haar", "db4", "sym8"}
    assert len(get_filter("sym8")) == 16
    f = get_filter("haar")
    assert get_filter(f) is f
    with pytest.raises(ValueError):
        get_filter("coif99")
    with pytest.raises(ValueError):
        WaveletFilter("bad", (1.0, 1.0), 1)
