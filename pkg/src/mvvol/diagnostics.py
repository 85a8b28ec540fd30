"""Model adequacy: portmanteau tests on standardized residuals and their
squares, with asymptotic or bootstrap critical values."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._validation import check_panel
from .exceptions import TooFewReplications, TooShort
from .meanmodel import portmanteau_terms

LEVELS = (0.01, 0.05, 0.10)
SERIES = ("levels", "squares")
DEFAULT_LAGS = (5, 10, 15)


@dataclass
class BootstrapCriticalValues:
    """Upper-tail quantiles of Q(m) under row-wise iid resampling.

    ``values[series]`` has shape ``(len(lags), len(levels))``;
    ``samples[series]`` keeps the bootstrap draws, shape ``(n_boot, len(lags))``.
    """

    lags: tuple
    levels: tuple
    values: dict
    n_boot: int
    seed: object
    samples: dict = field(default=None, repr=False)

    def critical_value(self, series, lag, level):
        return float(self.values[series][self.lags.index(lag), self.levels.index(level)])

    def pvalue(self, series, lag, q):
        draws = self.samples[series][:, self.lags.index(lag)]
        return float((1 + np.sum(draws >= q)) / (1 + draws.size))

    def rows(self):
        out = []
        for s in SERIES:
            for i, lag in enumerate(self.lags):
                row = {"series": s, "lag": lag}
                for j, lev in enumerate(self.levels):
                    row[f"{lev:.0%}"] = float(self.values[s][i, j])
                out.append(row)
        return out


def _q_all(x, lags):
    terms = portmanteau_terms(x, max(lags))
    cum = np.cumsum(terms)
    return cum[[lag - 1 for lag in lags]]


def _replicate(x, lags, seeds):
    T = x.shape[0]
    out = np.empty((len(seeds), 2, len(lags)))
    for b, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        xb = x[rng.integers(0, T, size=T)]
        out[b, 0] = _q_all(xb, lags)
        out[b, 1] = _q_all(xb * xb, lags)
    return out


def bootstrap_critical_values(residuals_std, lags=DEFAULT_LAGS, n_boot=10_000, seed=None,
                              levels=LEVELS, threads=1):
    """Finite-sample critical values for the portmanteau statistics.

    Each replication draws T whole rows with replacement, which keeps the
    cross-sectional dependence and removes any serial dependence, then
    computes Q(m) for the resampled series and its elementwise square.
    Replication ``b`` uses its own stream spawned from ``seed``, so results
    do not depend on ``threads``, and the first n streams are shared by any
    larger ``n_boot``.
    """
    x = check_panel(residuals_std)
    lags = tuple(int(l) for l in lags)
    if n_boot < 100:
        raise TooFewReplications("n_boot must be at least 100")
    if x.shape[0] <= max(lags):
        raise TooShort(f"need more than {max(lags)} rows")
    seeds = np.random.SeedSequence(seed).spawn(int(n_boot))
    threads = max(1, int(threads))
    if threads == 1:
        q = _replicate(x, lags, seeds)
    else:
        chunks = np.array_split(np.arange(n_boot), threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = pool.map(lambda c: _replicate(x, lags, [seeds[i] for i in c]), chunks)
            q = np.concatenate(list(parts))
    values, samples = {}, {}
    for s, series in enumerate(SERIES):
        draws = q[:, s, :]
        samples[series] = draws
        values[series] = np.quantile(draws, [1 - lev for lev in levels], axis=0).T
    return BootstrapCriticalValues(lags=lags, levels=tuple(levels), values=values,
                                   n_boot=int(n_boot), seed=seed, samples=samples)


@dataclass
class AdequacyRow:
    series: str
    lag: int
    statistic: float
    pvalue: float
    critical: dict
    significant: dict

    def __str__(self):
        return f"Q({self.lag}) = {self.statistic:.2f}({self.pvalue:.2f})"


@dataclass
class AdequacyReport:
    """Portmanteau statistics with verdicts.

    The model is judged adequate when no statistic is significant at the 1%
    level.
    """

    rows: list
    method: str
    decision_level: float = 0.01

    @property
    def adequate(self):
        return not any(r.significant[self.decision_level] for r in self.rows)

    def rejected(self, series=None):
        return [r for r in self.rows
                if r.significant[self.decision_level] and (series is None or r.series == series)]

    def to_dict(self):
        return {
            "method": self.method,
            "decision_level": self.decision_level,
            "adequate": self.adequate,
            "rows": [
                {"series": r.series, "lag": r.lag, "statistic": r.statistic,
                 "pvalue": r.pvalue,
                 "critical": {f"{k:.0%}": v for k, v in r.critical.items()},
                 "significant": {f"{k:.0%}": v for k, v in r.significant.items()}}
                for r in self.rows
            ],
        }

    def to_text(self):
        lines = [f"critical values: {self.method}"]
        head = "series    statistic".ljust(34) + "".join(f"{lev:>10.0%}" for lev in LEVELS)
        lines.append(head)
        for r in self.rows:
            mark = "*" if r.significant[self.decision_level] else ""
            lines.append(f"{r.series:<9} {str(r):<24}"
                         + "".join(f"{r.critical[lev]:>10.2f}" for lev in LEVELS) + f" {mark}")
        verdict = "adequate" if self.adequate else "NOT adequate"
        lines.append(f"verdict: {verdict} (no statistic significant at "
                     f"{self.decision_level:.0%} => adequate)")
        return "\n".join(lines)


def adequacy_report(fit, crits="asymptotic", lags=None):
    """Compare Q(m) of the standardized residuals and their squares with
    critical values.

    Parameters
    ----------
    fit : FitResult, fitted estimator or array
        Anything carrying standardized residuals.
    crits : "asymptotic" or BootstrapCriticalValues
        Asymptotic uses chi-square with k^2 m degrees of freedom.
    """
    resid = getattr(fit, "result_", fit)
    resid = getattr(resid, "residuals_std", resid)
    x = check_panel(resid)
    k = x.shape[1]
    boot = not isinstance(crits, str)
    if lags is None:
        lags = crits.lags if boot else DEFAULT_LAGS
    lags = tuple(int(l) for l in lags)
    rows = []
    for series, data in (("levels", x), ("squares", x * x)):
        q = _q_all(data, lags)
        for lag, stat in zip(lags, q):
            if boot:
                crit = {lev: crits.critical_value(series, lag, lev) for lev in LEVELS}
                pv = crits.pvalue(series, lag, stat)
            else:
                df = k * k * lag
                crit = {lev: float(stats.chi2.isf(lev, df)) for lev in LEVELS}
                pv = float(stats.chi2.sf(stat, df))
            sig = {lev: bool(stat > crit[lev]) for lev in LEVELS}
            rows.append(AdequacyRow(series, lag, float(stat), pv, crit, sig))
    method = f"bootstrap (n_boot={crits.n_boot})" if boot else "asymptotic chi-square"
    return AdequacyReport(rows=rows, method=method)
