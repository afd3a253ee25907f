"""Survival-function tail fits in ``log(-log P)`` coordinates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

#: bins with fewer exceedances than this are dropped from the fit
MIN_EXCEEDANCES = 20


@dataclass
class TailFit:
    """Fit of ``log(-log P(X > lam)) ~ theta * log(lam) + const``."""

    lam: list[float] = field(default_factory=list)
    survival: list[float] = field(default_factory=list)
    exceedances: list[int] = field(default_factory=list)
    used: list[bool] = field(default_factory=list)
    theta: float | None = None
    intercept: float | None = None
    stderr: float | None = None
    band: tuple[float, float] | None = None
    reliable: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "survival": self.survival,
            "exceedances": self.exceedances,
            "used": self.used,
            "theta": self.theta,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "band": list(self.band) if self.band is not None else None,
            "reliable": self.reliable,
            "reason": self.reason,
        }

    def rows(self) -> list[tuple]:
        return list(zip(self.lam, self.survival, self.exceedances, self.used))


def fit_tail(
    samples,
    n_bins: int = 12,
    min_exceed: int = MIN_EXCEEDANCES,
    lower_quantile: float = 0.5,
    min_bins: int = 3,
) -> TailFit:
    """Fit the tail exponent of ``samples`` above the ``lower_quantile``.

    Bins are log-spaced between that quantile and the largest level that
    still has ``min_exceed`` exceedances.  Fewer than ``min_bins`` usable
    bins leaves ``theta`` empty and the fit flagged unreliable.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    out = TailFit()
    if n <= min_exceed or x[-1] <= 0:
        out.reason = f"{n} samples cannot supply {min_exceed} exceedances"
        return out
    lo = max(float(np.quantile(x, lower_quantile)), float(x[x > 0][0]))
    hi = float(x[n - min_exceed - 1])
    if not hi > lo:
        out.reason = "no spread between the median and the last populated level"
        return out
    lam = np.geomspace(lo, hi, n_bins)
    counts = n - np.searchsorted(x, lam, side="right")
    surv = counts / n
    used = (counts >= min_exceed) & (surv < 1.0) & (surv > 0.0)
    out.lam = lam.tolist()
    out.survival = surv.tolist()
    out.exceedances = counts.astype(int).tolist()
    out.used = used.tolist()
    if used.sum() < min_bins:
        out.reason = f"only {int(used.sum())} bins with >= {min_exceed} exceedances"
        return out
    X = np.log(lam[used])
    Y = np.log(-np.log(surv[used]))
    reg = stats.linregress(X, Y)
    out.theta = float(reg.slope)
    out.intercept = float(reg.intercept)
    out.stderr = float(reg.stderr)
    out.band = (out.theta - 2 * out.stderr, out.theta + 2 * out.stderr)
    out.reliable = True
    return out
