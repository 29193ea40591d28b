import pytest

from zomd.verify import (
    CheckRow,
    second_moment_bounds,
    unbiasedness_suite,
    verify_suite,
    volume_ratio_suite,
)


def test_all_suites_pass():
    rows = verify_suite("all")
    assert len(rows) >= 30
    bad = [str(r) for r in rows if not r.passed]
    assert not bad, bad


def test_suite_names_and_aliases():
    a = verify_suite("volume", n_list=(2, 3))
    b = verify_suite("volume-ratio", n_list=(2, 3))
    assert len(a) == len(b) == 4
    assert [r.name for r in a] == [r.name for r in b]
    with pytest.raises(ValueError):
        verify_suite("smoothness")


def test_dimension_list_is_honored():
    rows = volume_ratio_suite(n_list=(4,))
    assert len(rows) == 2
    assert all("n=4" in r.name for r in rows)


def test_row_rendering():
    row = CheckRow("demo", "x", 1.0, 1.0, 0.1, True)
    assert str(row).startswith("[PASS]")
    row = CheckRow("demo", "x", 9.0, 1.0, 0.1, False)
    assert str(row).startswith("[FAIL]")


def test_unbiasedness_suite_row_shape():
    rows = unbiasedness_suite(n_list=(2,), draws=60000)
    # two schemes times two channel settings
    assert len(rows) == 4
    assert all(r.suite == "unbiasedness" for r in rows)
    assert all(r.tolerance == 4.0 for r in rows)


def test_second_moment_bound_formulas():
    import math
    n, M2, L2, mu, delta = 8, 2.0, 1.0, 0.2, 0.01
    b2, binf = second_moment_bounds(n, M2, L2, mu, delta)
    want2 = 3 * n * M2**2 + 0.75 * n**2 * L2**2 * mu**2 \
        + 12 * n**2 * delta**2 / mu**2
    wantinf = 4 * math.log(n) * M2**2 + 3 * n * math.log(n) * L2**2 * mu**2 \
        + 48 * n * math.log(n) * delta**2 / mu**2
    assert b2 == pytest.approx(want2)
    assert binf == pytest.approx(wantinf)
    # noise-free bounds are smaller
    c2, cinf = second_moment_bounds(n, M2, L2, mu, 0.0)
    assert c2 < b2 and cinf < binf
