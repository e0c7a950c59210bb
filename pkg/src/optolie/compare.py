"""Analytic-vs-oracle comparison: deviation reports and envelope events."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observables import ObservableSeries


@dataclass(frozen=True)
class Tolerance:
    """``abs``: absolute bound; ``relative``: fraction of the analytic value;
    ``range``: fraction of the oracle signal range; ``excursion``: fraction of
    the analytic series' largest excursion from its initial value."""
    kind: str = "abs"
    value: float = 1e-5

    def __post_init__(self):
        if self.kind not in ("abs", "relative", "range", "excursion"):
            raise ValueError(f"unknown tolerance kind {self.kind!r}")
        if not self.value > 0:
            raise ValueError("tolerance must be positive")

    def bound(self, analytic: np.ndarray, oracle: np.ndarray) -> float:
        if self.kind == "abs":
            return self.value
        if self.kind == "relative":
            return self.value * float(np.max(np.abs(analytic)))
        if self.kind == "range":
            return self.value * float(np.ptp(oracle))
        return self.value * float(np.max(np.abs(analytic - analytic[0])))


@dataclass(frozen=True)
class DeviationEntry:
    label: str
    max_abs: float
    mean_abs: float
    t_at_max: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.bound


@dataclass(frozen=True)
class ComparisonReport:
    scenario: str
    entries: tuple

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def format(self) -> str:
        lines = [f"scenario {self.scenario}"]
        for e in self.entries:
            lines.append(f"  {e.label:<28s} max {e.max_abs:.3e} at t={e.t_at_max:.4g}  "
                         f"mean {e.mean_abs:.3e}  bound {e.bound:.3e}  "
                         f"{'PASS' if e.passed else 'FAIL'}")
        lines.append(f"  overall {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def deviation(label: str, analytic: ObservableSeries, oracle: ObservableSeries,
              tol: Tolerance, t_max: float | None = None) -> DeviationEntry:
    if not np.array_equal(analytic.t_grid, oracle.t_grid):
        raise ValueError("series must share a time grid")
    t = analytic.t_grid
    m = np.ones(t.size, bool) if t_max is None else t <= t_max + 1e-12
    a, o = analytic.values[m], oracle.values[m]
    d = np.abs(a - o)
    i = int(np.argmax(d))
    return DeviationEntry(label, float(d[i]), float(d.mean()), float(t[m][i]), tol.bound(a, o))


def envelope(series: ObservableSeries, window: float) -> np.ndarray:
    """Peak-to-peak amplitude in a centered window (shrinking at the edges)."""
    t, y = series.t_grid, series.values
    lo = np.searchsorted(t, t - 0.5 * window, side="left")
    hi = np.searchsorted(t, t + 0.5 * window, side="right")
    return np.array([np.ptp(y[a:b]) for a, b in zip(lo, hi)])


def envelope_events(series: ObservableSeries, window: float, level: float = 0.5):
    """Collapse and revival times of an oscillating series.

    A collapse is a down-crossing of ``level`` times the initial envelope,
    a revival the next up-crossing. Crossing times are linearly interpolated.
    """
    t = series.t_grid
    env = envelope(series, window)
    thr = level * env[0]
    above = env >= thr
    collapses, revivals = [], []
    for i in range(1, t.size):
        if above[i - 1] != above[i]:
            s = (thr - env[i - 1]) / (env[i] - env[i - 1])
            tc = float(t[i - 1] + s * (t[i] - t[i - 1]))
            (collapses if above[i - 1] else revivals).append(tc)
    return np.array(collapses), np.array(revivals)


def envelope_extrema(series: ObservableSeries, window: float):
    """Times of the envelope's interior local minima and maxima after its first
    drop to half height."""
    t = series.t_grid
    env = envelope(series, window)
    half = np.nonzero(env < 0.5 * env[0])[0]
    start = half[0] if half.size else t.size
    mins, maxs = [], []
    w = max(1, int(round(0.5 * window / np.mean(np.diff(t)))))
    for i in range(max(start, w), t.size - w):
        seg = env[i - w:i + w + 1]
        if env[i] == seg.min() and seg.max() > seg.min():
            mins.append(float(t[i]))
        elif env[i] == seg.max() and seg.max() > seg.min():
            maxs.append(float(t[i]))
    return _dedupe(mins, window), _dedupe(maxs, window)


def _dedupe(times, window):
    out = []
    for x in times:
        if not out or x - out[-1] > window:
            out.append(x)
    return np.array(out)


def dominant_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """Angular frequency from mean-crossing count of a periodic signal."""
    y = np.asarray(y, float) - np.mean(y)
    s = np.signbit(y)
    idx = np.nonzero(s[1:] != s[:-1])[0]
    if idx.size < 3:
        raise ValueError("too few crossings to measure a frequency")
    # linear interpolation of the crossing instants
    tc = t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])
    return float(np.pi * (idx.size - 1) / (tc[-1] - tc[0]))
