"""Two-layer decision tree: similarity metric first, then index family."""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass

from .metafeatures import MetaFeatureProfile

# two-sided 95% normal quantile
Z95 = 1.96


@dataclass(frozen=True)
class SelectionThresholds:
    cv_max: float = 0.1
    ra_min_deg: float = 60.0
    rc_max: float = 1.5

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.cv_max, self.ra_min_deg, self.rc_max)):
            raise ValueError("thresholds must be finite")
        if self.cv_max < 0:
            raise ValueError("cv_max must be >= 0")


@dataclass(frozen=True)
class RuleRecord:
    layer: str
    rule: str
    operands: dict
    outcome: str
    explanation: str


@dataclass(frozen=True)
class SelectionResult:
    metric: str  # "InnerProduct" | "Euclidean"
    family: str  # "Partition" | "Graph"
    trace: tuple[RuleRecord, ...]

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "family": self.family,
            "trace": [asdict(r) for r in self.trace],
        }

    def trace_lines(self) -> list[str]:
        return [f"[{r.layer}] {r.explanation}" for r in self.trace]


def select_metric(profile: MetaFeatureProfile, thresholds: SelectionThresholds = SelectionThresholds()) -> tuple[str, RuleRecord]:
    angular = profile.dbi_e >= profile.dbi_c
    uniform_norms = profile.cv <= thresholds.cv_max
    metric = "InnerProduct" if angular and uniform_norms else "Euclidean"
    why = (
        f"DBI_E={profile.dbi_e!r} {'>=' if angular else '<'} DBI_C={profile.dbi_c!r}; "
        f"CV={profile.cv!r} {'<=' if uniform_norms else '>'} {thresholds.cv_max!r} -> {metric}"
    )
    record = RuleRecord(
        layer="metric",
        rule="(DBI_E >= DBI_C) AND (CV <= cv_max) -> InnerProduct, else Euclidean",
        operands={
            "dbi_e": profile.dbi_e,
            "dbi_c": profile.dbi_c,
            "cv": profile.cv,
            "cv_max": thresholds.cv_max,
            "dbi_e_ge_dbi_c": angular,
            "cv_le_cv_max": uniform_norms,
        },
        outcome=metric,
        explanation=why,
    )
    return metric, record


def select_family(profile: MetaFeatureProfile, thresholds: SelectionThresholds = SelectionThresholds()) -> tuple[str, RuleRecord]:
    wide = profile.ra_deg >= thresholds.ra_min_deg
    flat = profile.rc <= thresholds.rc_max
    family = "Partition" if wide or flat else "Graph"
    why = (
        f"RA={profile.ra_deg!r} {'>=' if wide else '<'} {thresholds.ra_min_deg!r}; "
        f"RC={profile.rc!r} {'<=' if flat else '>'} {thresholds.rc_max!r} -> {family}"
    )
    record = RuleRecord(
        layer="family",
        rule="(RA >= ra_min_deg) OR (RC <= rc_max) -> Partition, else Graph",
        operands={
            "ra_deg": profile.ra_deg,
            "rc": profile.rc,
            "ra_min_deg": thresholds.ra_min_deg,
            "rc_max": thresholds.rc_max,
            "ra_ge_ra_min": wide,
            "rc_le_rc_max": flat,
        },
        outcome=family,
        explanation=why,
    )
    return family, record


def select(profile: MetaFeatureProfile, thresholds: SelectionThresholds = SelectionThresholds()) -> SelectionResult:
    metric, r1 = select_metric(profile, thresholds)
    family, r2 = select_family(profile, thresholds)
    return SelectionResult(metric=metric, family=family, trace=(r1, r2))


def fit_threshold_bounds(values) -> tuple[float, float]:
    """Normal-quantile spread interval ``mean -/+ 1.96 * s`` (s: sample sd).

    This is a spread of the observations, not a confidence interval of the
    mean, matching how the CV cut-off was derived.
    """
    vals = [float(v) for v in values]
    if len(vals) < 2:
        raise ValueError("need at least 2 values")
    mean = statistics.fmean(vals)
    s = statistics.stdev(vals)
    return mean - Z95 * s, mean + Z95 * s
