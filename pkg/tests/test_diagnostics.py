import json

import numpy as np
import pytest
from scipy import stats

from mvvol.diagnostics import (AdequacyRow, adequacy_report, bootstrap_critical_values)
from mvvol.exceptions import TooFewReplications, TooShort
from mvvol.meanmodel import multivariate_ljung_box


@pytest.fixture(scope="module")
def iid3():
    return np.random.default_rng(77).standard_normal((1000, 3))


@pytest.fixture(scope="module")
def crits(iid3):
    return bootstrap_critical_values(iid3, n_boot=1000, seed=123)


class TestBootstrap:
    def test_calibration(self, crits):
        ref = stats.chi2.ppf(0.95, 45)
        assert ref == pytest.approx(61.66, abs=0.01)
        assert abs(crits.critical_value("levels", 5, 0.05) / ref - 1) < 0.15

    def test_monotone_in_level(self, crits):
        for series in ("levels", "squares"):
            v = crits.values[series]
            assert np.all(v[:, 0] > v[:, 1]) and np.all(v[:, 1] > v[:, 2])

    def test_monotone_in_lag(self, crits):
        for series in ("levels", "squares"):
            assert np.all(np.diff(crits.values[series], axis=0) > 0)

    def test_bit_identical(self, iid3, crits):
        again = bootstrap_critical_values(iid3, n_boot=1000, seed=123)
        for s in ("levels", "squares"):
            assert np.array_equal(again.values[s], crits.values[s])

    def test_threads_do_not_change_results(self, iid3):
        a = bootstrap_critical_values(iid3[:300], n_boot=200, seed=5)
        b = bootstrap_critical_values(iid3[:300], n_boot=200, seed=5, threads=3)
        assert np.array_equal(a.samples["squares"], b.samples["squares"])

    def test_nested_seeds(self, iid3, crits):
        big = bootstrap_critical_values(iid3, n_boot=2000, seed=123)
        for s in ("levels", "squares"):
            assert np.array_equal(big.samples[s][:1000], crits.samples[s])
            assert np.all(np.abs(big.values[s] / crits.values[s] - 1) < 0.05)

    def test_sample_statistic_reproduced(self, iid3):
        b = bootstrap_critical_values(iid3[:200], lags=(3,), n_boot=100, seed=0)
        rng = np.random.default_rng(np.random.SeedSequence(0).spawn(100)[0])
        xb = iid3[:200][rng.integers(0, 200, size=200)]
        q = multivariate_ljung_box(xb, 3).statistic
        assert b.samples["levels"][0, 0] == pytest.approx(q, rel=1e-12)

    def test_pvalue(self, crits):
        q = crits.critical_value("levels", 10, 0.05)
        assert crits.pvalue("levels", 10, q) == pytest.approx(0.05, abs=0.01)

    def test_too_few(self, iid3):
        with pytest.raises(TooFewReplications):
            bootstrap_critical_values(iid3, n_boot=99)

    def test_too_short(self):
        with pytest.raises(TooShort):
            bootstrap_critical_values(np.ones((10, 2)), lags=(10,), n_boot=100)


class TestReport:
    def test_row_format(self):
        row = AdequacyRow("levels", 10, 167.789, 0.3249, {}, {})
        assert str(row) == "Q(10) = 167.79(0.32)"

    def test_iid_adequate(self, iid3, crits):
        rep = adequacy_report(iid3, crits)
        assert rep.adequate
        assert [r.lag for r in rep.rows] == [5, 10, 15, 5, 10, 15]
        assert "verdict: adequate" in rep.to_text()
        json.dumps(rep.to_dict())

    def test_asymptotic(self, iid3):
        rep = adequacy_report(iid3, "asymptotic")
        row = rep.rows[0]
        assert row.statistic == pytest.approx(multivariate_ljung_box(iid3, 5).statistic)
        assert row.pvalue == pytest.approx(multivariate_ljung_box(iid3, 5).pvalue)
        assert row.critical[0.05] == pytest.approx(stats.chi2.ppf(0.95, 45))

    def test_arch_data_rejected(self):
        rng = np.random.default_rng(3)
        T = 2000
        x = np.zeros((T, 2))
        s = np.ones(2)
        for t in range(1, T):
            s = 0.1 + 0.5 * x[t - 1] ** 2 + 0.4 * s
            x[t] = np.sqrt(s) * rng.standard_normal(2)
        rep = adequacy_report(x / x.std(axis=0), "asymptotic")
        assert not rep.adequate
        assert rep.rejected("squares")
