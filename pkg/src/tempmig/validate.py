"""Sensitivity experiments on synthetic corpora.

The detection stack is stress-tested by thinning trajectories to a target
observation length (delta) and fraction of days observed (omega), then
re-running detection and comparing against the planted truth: home
accuracy over a (delta, omega) grid, recall of planted away stays over an
omega grid, and the selection bias the observational filters induce on
home locations (sample size, capital-share ratio, density-bin shares).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import FilterConstraints
from .segments import DetectionParams, detect_macro, detect_meso, annotate, classify
from .inference import monthly_locations
from .synth import AgentTruth, GroundTruth, InfeasibleThinning, ThinningSpec, daily_series_of, thin_days
from .timeutil import overlap_days


@dataclass
class AccuracyReport:
    """Grid results: (delta, omega) -> value plus per-point sample sizes."""

    values: dict[tuple[int, float], float] = field(default_factory=dict)
    counts: dict[tuple[int, float], int] = field(default_factory=dict)
    skipped: int = 0

    def write_csv(self, path, value_name: str = "value") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["delta_days", "omega", value_name, "n"])
            for key in sorted(self.values):
                writer.writerow([key[0], f"{key[1]:.6g}", f"{self.values[key]:.6f}", self.counts[key]])


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties."""
    def ranks(vals):
        order = sorted(range(len(vals)), key=lambda i: vals[i])
        rank = [0.0] * len(vals)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                rank[order[k]] = avg
            i = j + 1
        return rank

    rx, ry = ranks(list(xs)), ranks(list(ys))
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den if den else 0.0


def detect_home(daily: dict[int, int], params: DetectionParams) -> int:
    """Home cell a thinned trajectory resolves to (single-macro users:
    the preliminary home; multi-macro users: the longest macro)."""
    monthly = monthly_locations(daily)
    macros = detect_macro(monthly, daily, params)
    return max(macros, key=lambda m: m.n_days).cell


def detected_events(daily: dict[int, int], params: DetectionParams):
    monthly = monthly_locations(daily)
    macros = detect_macro(monthly, daily, params)
    segments = annotate(detect_meso(daily, params), daily, macros)
    return classify(segments, params.tau_min_days)


def home_accuracy(
    truth: GroundTruth,
    deltas: Sequence[int],
    omegas: Sequence[float],
    params: DetectionParams | None = None,
    seed: int = 0,
) -> AccuracyReport:
    """Fraction of agents whose home survives thinning to (delta, omega)."""
    params = params or DetectionParams()
    report = AccuracyReport()
    rng = np.random.default_rng(seed)
    series = [(agent, daily_series_of(agent)) for agent in truth.agents]
    for delta in deltas:
        for omega in omegas:
            correct = 0
            total = 0
            for agent, daily in series:
                spec = ThinningSpec(delta_days=delta, omega=omega)
                try:
                    kept = thin_days(sorted(daily), spec, rng)
                except InfeasibleThinning:
                    report.skipped += 1
                    continue
                thinned = {d: daily[d] for d in kept}
                total += 1
                if detect_home(thinned, params) == agent.home:
                    correct += 1
            key = (delta, float(omega))
            report.values[key] = correct / total if total else float("nan")
            report.counts[key] = total
    return report


def _matches_planted(detected, planted, min_overlap_frac: float = 0.5) -> bool:
    need = math.ceil(planted.n_days * min_overlap_frac)
    for ev in detected:
        if ev.destination == planted.destination:
            if overlap_days(ev.start, ev.end, planted.start, planted.end) >= need:
                return True
    return False


def migration_recall(
    truth: GroundTruth,
    omegas: Sequence[float],
    delta: int = 360,
    params: DetectionParams | None = None,
    seed: int = 0,
) -> AccuracyReport:
    """Fraction of planted stays still detected after thinning to omega.

    A planted stay counts as recovered when some detected event at the
    same destination overlaps at least half of it; the denominator is the
    planted stays lying fully inside the retained window.
    """
    params = params or DetectionParams()
    report = AccuracyReport()
    rng = np.random.default_rng(seed)
    agents = [
        (agent, daily_series_of(agent))
        for agent in truth.agents
        if any(s.n_days >= params.tau_min_days for s in agent.stays)
    ]
    for omega in omegas:
        found = 0
        total = 0
        for agent, daily in agents:
            spec = ThinningSpec(delta_days=delta, omega=omega)
            try:
                kept = thin_days(sorted(daily), spec, rng)
            except InfeasibleThinning:
                report.skipped += 1
                continue
            w0, w1 = kept[0], kept[-1]
            thinned = {d: daily[d] for d in kept}
            events = detected_events(thinned, params)
            for planted in agent.stays:
                if planted.n_days < params.tau_min_days:
                    continue
                if planted.start < w0 or planted.end > w1:
                    continue
                total += 1
                if _matches_planted(events, planted):
                    found += 1
        key = (delta, float(omega))
        report.values[key] = found / total if total else float("nan")
        report.counts[key] = total
    return report


# ---------------------------------------------------------------------------
# filtering-bias surfaces

@dataclass
class BiasSurface:
    """Per filter-grid point: remaining sample size, capital bias ratio and
    the user shares across population-density bins."""

    sample_size: dict[tuple, int] = field(default_factory=dict)
    capital_bias: dict[tuple, float] = field(default_factory=dict)
    bin_shares: dict[tuple, list[float]] = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            n_bins = len(next(iter(self.bin_shares.values()))) if self.bin_shares else 0
            writer.writerow(
                ["min_span_days", "min_frac_observed", "max_gap_days", "sample_size", "capital_bias"]
                + [f"bin_{i + 1}" for i in range(n_bins)]
            )
            for key in sorted(self.sample_size):
                row = list(key) + [self.sample_size[key]]
                bias = self.capital_bias[key]
                row.append(f"{bias:.6f}" if not math.isnan(bias) else "")
                row.extend(f"{v:.6f}" for v in self.bin_shares[key])
                writer.writerow(row)


def density_bins(pops: Mapping[int, float], densities: Mapping[int, float], n_bins: int = 10) -> dict[int, int]:
    """Assign cells to bins of roughly equal population, ordered by density."""
    cells = sorted(pops, key=lambda c: (densities[c], c))
    total = sum(pops.values())
    target = total / n_bins
    assignment: dict[int, int] = {}
    acc = 0.0
    b = 0
    for cell in cells:
        assignment[cell] = min(b, n_bins - 1)
        acc += pops[cell]
        while acc >= target * (b + 1) and b < n_bins - 1:
            b += 1
    return assignment


def bias_surfaces(
    profiles: Mapping[str, "ObservationProfile"],
    homes: Mapping[str, int],
    grid: Sequence[tuple[int, float, int]],
    pops: Mapping[int, float],
    densities: Mapping[int, float],
    capital_cell: int,
    n_bins: int = 10,
) -> BiasSurface:
    """Evaluate sample size and home-location selection per constraint triple.

    ``grid`` holds (min_span_days, min_frac_observed, max_gap_days)
    triples; ``homes`` maps users to their inferred home cells.
    """
    from .ingest import ObservationProfile  # circular-safe, typing only

    surface = BiasSurface()
    total_pop = sum(pops.values())
    capital_pop_share = pops.get(capital_cell, 0.0) / total_pop if total_pop else float("nan")
    bins = density_bins(pops, densities, n_bins)
    for min_span, min_frac, max_gap in grid:
        constraints = FilterConstraints(min_span, min_frac, max_gap)
        selected = [u for u, p in profiles.items() if constraints.admits(p)]
        key = (min_span, min_frac, max_gap)
        surface.sample_size[key] = len(selected)
        if selected and capital_pop_share:
            in_capital = sum(1 for u in selected if homes[u] == capital_cell)
            surface.capital_bias[key] = (in_capital / len(selected)) / capital_pop_share
        else:
            surface.capital_bias[key] = float("nan")
        counts = [0] * n_bins
        for u in selected:
            counts[bins[homes[u]]] += 1
        n = len(selected) or 1
        surface.bin_shares[key] = [c / n for c in counts]
    return surface
