"""Growth-law fits on novelty series and import concentration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

COVERAGE_TARGETS = (50, 80, 90)


class FitError(ValueError):
    pass


@dataclass
class GrowthFit:
    lang: str | None
    kind: str  # "heaps" or "linear"
    params: tuple[float, float]  # (exponent, prefactor) or (slope, intercept)
    r_squared: float
    n_range: tuple[int, int]
    points: int

    @property
    def exponent(self) -> float:
        return self.params[0]

    @property
    def slope(self) -> float:
        return self.params[0]


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept and R^2 of y on x. R^2 is 1 for a perfect fit of a flat series."""
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0:
        raise FitError("x has no spread")
    slope = float(dx @ dy) / sxx
    intercept = float(ym - slope * xm)
    resid = dy - slope * dx
    ss_res = float(resid @ resid)
    ss_tot = float(dy @ dy)
    if ss_tot == 0 or np.ptp(y) == 0:
        # a constant series is fitted exactly by a flat line
        slope, intercept, r2 = 0.0, float(y[0]), 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def _prepare(n, y, trim: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if n.shape != y.shape:
        raise FitError("series lengths differ")
    keep = n > trim
    return n[keep], y[keep]


def fit_heaps(n: Sequence[float], d: Sequence[float], trim: int = 0, lang: str | None = None) -> GrowthFit:
    """OLS of log D on log N; the slope is the Heaps exponent.

    Samples with N <= trim are dropped, as are samples with N < 1 or D < 1.
    """
    n, d = _prepare(n, d, trim)
    ok = (n >= 1) & (d >= 1)
    n, d = n[ok], d[ok]
    if len(n) < 3:
        raise FitError(f"need >= 3 points with N, D >= 1 for a Heaps fit, have {len(n)}")
    beta, log_a, r2 = _ols(np.log(n), np.log(d))
    return GrowthFit(lang, "heaps", (beta, float(np.exp(log_a))), r2, (int(n[0]), int(n[-1])), len(n))


def fit_linear(n: Sequence[float], p: Sequence[float], trim: int = 0, lang: str | None = None) -> GrowthFit:
    n, p = _prepare(n, p, trim)
    if len(n) < 3:
        raise FitError(f"need >= 3 points for a linear fit, have {len(n)}")
    slope, intercept, r2 = _ols(n, p)
    return GrowthFit(lang, "linear", (slope, intercept), r2, (int(n[0]), int(n[-1])), len(n))


@dataclass
class ConcentrationTable:
    lang: str | None
    ranked: list[tuple[str, int]]
    x: np.ndarray
    y: np.ndarray
    shares: dict[int, float] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.ranked)


def pareto_curve(
    counts: Mapping[str, int], targets: Sequence[int] = COVERAGE_TARGETS, lang: str | None = None
) -> ConcentrationTable:
    """Cumulative import share of the top fraction of libraries.

    ``shares[c]`` is the smallest fraction of libraries (ranked by count)
    whose cumulative share reaches c percent. The comparison is done in
    integers so that e.g. 90 of 100 imports meets the 90% target exactly.
    """
    if not counts:
        raise ValueError("pareto_curve needs at least one library")
    ranked = sorted(((k, int(v)) for k, v in counts.items() if v > 0), key=lambda kv: (-kv[1], kv[0]))
    if not ranked:
        raise ValueError("all counts are zero")
    values = np.array([c for _, c in ranked], dtype=np.int64)
    cum = np.cumsum(values)
    total = int(cum[-1])
    k = len(values)
    x = np.arange(k + 1, dtype=np.float64) / k
    y = np.concatenate(([0.0], cum / total))
    shares = {}
    for c in targets:
        i = int(np.searchsorted(cum * 100 >= c * total, True)) + 1
        shares[c] = i / k
    return ConcentrationTable(lang, ranked, x, y, shares)


@dataclass
class EcosystemReport:
    lang: str
    libraries: int
    imports: int
    shares: dict[int, float]
    heaps: GrowthFit | None
    linear: GrowthFit | None
    pairs_heaps: GrowthFit | None = None

    def row(self) -> dict:
        def g(fit, i):
            return None if fit is None else fit.params[i]

        row = {"language": self.lang, "libraries": self.libraries, "imports": self.imports}
        for c in sorted(self.shares):
            row[f"share_{c}_pct"] = 100.0 * self.shares[c]
        row.update(
            {
                "heaps_beta": g(self.heaps, 0),
                "heaps_r2": None if self.heaps is None else self.heaps.r_squared,
                "pair_slope": g(self.linear, 0),
                "pair_r2": None if self.linear is None else self.linear.r_squared,
            }
        )
        return row


def summarize_ecosystem(
    lang: str,
    counts: Mapping[str, int],
    heaps: GrowthFit | None = None,
    linear: GrowthFit | None = None,
    concentration: ConcentrationTable | None = None,
    pairs_heaps: GrowthFit | None = None,
) -> EcosystemReport | None:
    """One Table-1 style row; None for an ecosystem without imports.

    ``counts`` should already be restricted to the libraries under analysis
    (eligible ones when a threshold is active).
    """
    counts = {k: v for k, v in counts.items() if v > 0}
    if not counts:
        return None
    if concentration is None:
        concentration = pareto_curve(counts, lang=lang)
    return EcosystemReport(
        lang,
        libraries=len(counts),
        imports=int(sum(counts.values())),
        shares=dict(concentration.shares),
        heaps=heaps,
        linear=linear,
        pairs_heaps=pairs_heaps,
    )
