"""Offline evaluation over session logs.

Works on plain log records (lists of dicts as produced by the session
engine and the JSONL reader): extracts testing segments, computes
segment statistics and percent changes, runs a one-way ANOVA across
segments with frames as samples, Welch pairwise comparisons with
Bonferroni correction, and Pearson correlations between subjects.

The F and t tail probabilities both reduce to the regularized
incomplete beta function; scipy provides it, and the tests cross-check
the resulting survival functions against direct numerical integration
of the densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import betainc

from .trainer import TrainingMode

TEST_MODE = int(TrainingMode.TEST)


class DegenerateGroupsError(ValueError):
    """All samples identical across all groups; F is 0/0."""


class ZeroVarianceError(ValueError):
    """A correlation input has no variance."""


@dataclass(frozen=True)
class TestingSegment:
    """One maximal run of consecutive testing-mode frames."""

    index: int
    start_t: float
    end_t: float
    scores: list[float]
    mean: float
    frame_count: int


@dataclass(frozen=True)
class AnovaResult:
    F: float
    df1: int
    df2: int
    p: float


def segment_tests(records: list[dict]) -> list[TestingSegment]:
    """Contiguous maximal runs of testing frames, in time order."""
    from .logio import MalformedLogError

    segments: list[TestingSegment] = []
    run_t: list[float] = []
    run_scores: list[float] = []

    def close_run():
        if run_t:
            segments.append(
                TestingSegment(
                    index=len(segments),
                    start_t=run_t[0],
                    end_t=run_t[-1],
                    scores=list(run_scores),
                    mean=math.fsum(run_scores) / len(run_scores),
                    frame_count=len(run_scores),
                )
            )
            run_t.clear()
            run_scores.clear()

    for record in records:
        if "mode" not in record:
            continue
        try:
            mode = record["mode"]
            t = record["t"]
            total = record["scores"]["total"]
        except (KeyError, TypeError) as exc:
            raise MalformedLogError(f"frame record missing field: {exc}") from exc
        if mode == TEST_MODE:
            run_t.append(t)
            run_scores.append(total)
        else:
            close_run()
    close_run()
    return segments


def percent_change(means: list[float]) -> list[float | None]:
    """Step-to-step percent change; None flags steps from a zero mean."""
    changes: list[float | None] = []
    for prev, nxt in zip(means, means[1:]):
        if prev == 0.0:
            changes.append(None)
        else:
            changes.append((nxt - prev) / prev * 100.0)
    return changes


def _check_groups(groups: list[list[float]]) -> None:
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    for i, group in enumerate(groups):
        if len(group) < 2:
            raise ValueError(f"group {i} needs at least 2 samples")


def _f_sf(F: float, df1: int, df2: int) -> float:
    """Survival function of the F distribution via the regularized incomplete beta."""
    if math.isinf(F):
        return 0.0
    return float(betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * F)))


def _t_sf(t: float, df: float) -> float:
    """One-sided survival function of Student's t, t >= 0."""
    return float(betainc(df / 2.0, 0.5, df / (df + t * t))) / 2.0


def anova_oneway(groups: list[list[float]]) -> AnovaResult:
    """Classic one-way F with df (K-1, N-K), frames as samples."""
    _check_groups(groups)
    k = len(groups)
    n = sum(len(g) for g in groups)
    grand = math.fsum(math.fsum(g) for g in groups) / n
    means = [math.fsum(g) / len(g) for g in groups]
    ss_between = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(groups, means))
    ss_within = math.fsum(
        math.fsum((x - m) ** 2 for x in g) for g, m in zip(groups, means)
    )
    df1 = k - 1
    df2 = n - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            raise DegenerateGroupsError("all samples identical; F undefined")
        return AnovaResult(math.inf, df1, df2, 0.0)
    F = (ss_between / df1) / (ss_within / df2)
    return AnovaResult(F, df1, df2, _f_sf(F, df1, df2))


def welch_t(a: list[float], b: list[float]) -> tuple[float, float, float]:
    """Welch two-sample t statistic, its degrees of freedom, and two-sided p."""
    na, nb = len(a), len(b)
    ma = math.fsum(a) / na
    mb = math.fsum(b) / nb
    va = math.fsum((x - ma) ** 2 for x in a) / (na - 1)
    vb = math.fsum((x - mb) ** 2 for x in b) / (nb - 1)
    se2 = va / na + vb / nb
    if se2 == 0.0:
        # Constant groups: equal means are indistinguishable, unequal certain.
        return (0.0, float(na + nb - 2), 1.0) if ma == mb else (math.inf, float(na + nb - 2), 0.0)
    t = (ma - mb) / math.sqrt(se2)
    df = se2 * se2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    if math.isinf(t):
        return t, df, 0.0
    return t, df, 2.0 * _t_sf(abs(t), df)


def posthoc_pairwise(groups: list[list[float]]) -> list[list[float | None]]:
    """Upper-triangular matrix of Bonferroni-corrected Welch p-values."""
    _check_groups(groups)
    k = len(groups)
    comparisons = k * (k - 1) // 2
    matrix: list[list[float | None]] = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            _, _, p = welch_t(groups[i], groups[j])
            matrix[i][j] = min(1.0, p * comparisons)
    return matrix


def pearson(series_a: list[float], series_b: list[float]) -> float:
    """Product-moment correlation of two equal-length series."""
    if len(series_a) != len(series_b):
        raise ValueError("series must have equal length; resample first")
    n = len(series_a)
    if n < 2:
        raise ValueError("need at least 2 samples")
    ma = math.fsum(series_a) / n
    mb = math.fsum(series_b) / n
    da = [x - ma for x in series_a]
    db = [x - mb for x in series_b]
    va = math.fsum(x * x for x in da)
    vb = math.fsum(x * x for x in db)
    if va == 0.0 or vb == 0.0:
        raise ZeroVarianceError("a series has zero variance")
    cov = math.fsum(x * y for x, y in zip(da, db))
    return cov / math.sqrt(va * vb)


def resample_linear(series: list[float], length: int) -> list[float]:
    """Linearly resample a series onto `length` points over normalized time."""
    import numpy as np

    if length < 2 or len(series) < 2:
        raise ValueError("need at least 2 points on both grids")
    if len(series) == length:
        return list(series)
    src = np.linspace(0.0, 1.0, len(series))
    dst = np.linspace(0.0, 1.0, length)
    return [float(v) for v in np.interp(dst, src, np.asarray(series, dtype=float))]


def correlate_subjects(series_by_subject: dict[str, list[float]]) -> list[dict]:
    """Pairwise Pearson r between subjects, resampling to the longest series."""
    names = list(series_by_subject)
    pairs = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a = series_by_subject[names[i]]
            b = series_by_subject[names[j]]
            length = max(len(a), len(b))
            r = pearson(resample_linear(a, length), resample_linear(b, length))
            pairs.append({"a": names[i], "b": names[j], "r": r})
    return pairs


def analyze_log(records: list[dict]) -> dict:
    """Full single-log report: segments, trend, ANOVA, post-hoc matrix."""
    segments = segment_tests(records)
    means = [seg.mean for seg in segments]
    report: dict = {
        "segments": [
            {
                "index": seg.index,
                "start_t": seg.start_t,
                "end_t": seg.end_t,
                "frames": seg.frame_count,
                "mean": seg.mean,
            }
            for seg in segments
        ],
        "segment_means": means,
        "percent_change": percent_change(means) if len(means) >= 2 else [],
        "anova": None,
        "posthoc": None,
    }
    groups = [seg.scores for seg in segments if seg.frame_count >= 2]
    if len(groups) >= 2:
        try:
            result = anova_oneway(groups)
        except DegenerateGroupsError:
            result = None
        if result is not None:
            report["anova"] = {"F": result.F, "df1": result.df1, "df2": result.df2, "p": result.p}
        report["posthoc"] = posthoc_pairwise(groups)
    return report
