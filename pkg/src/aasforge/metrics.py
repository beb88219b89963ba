"""Rating schema and the quantitative metrics computed from collected ratings.

A rating records the ten decisions one evaluator makes about one generated
property: an up-front comprehension statement, five per-element inaccuracy
flags (name, value, definition, affordance, unit), 1-5 quality scores for
the definition and affordance texts, a helpfulness score that only exists
for properties the evaluator did not comprehend up front, and an overall
1-5 release-readiness score.

The metrics are: pass rate (fraction of ratings with no inaccuracy flag and
all three scores at 5), helpfulness score (mean helpfulness over the
initially-not-comprehended cases), per-element inaccuracy rates, and a
Welch unequal-variances t-test used to compare retrieval-on against
retrieval-off configurations. The Student-t tail probability is computed
from the regularized incomplete beta function (continued fraction, modified
Lentz), so no statistics dependency is needed.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from statistics import fmean
from typing import Any, Iterable, Mapping, Optional, Sequence

from .errors import (
    DegenerateVarianceError,
    EmptySampleError,
    FormatError,
    InsufficientSampleError,
    ValidationError,
)

log = logging.getLogger(__name__)

INACCURACY_ELEMENTS = ("name", "value", "definition", "affordance", "unit")

RATINGS_CSV_HEADER = [
    "sample_id",
    "config_id",
    "annotator_id",
    "comprehended",
    "inacc_name",
    "inacc_value",
    "inacc_definition",
    "inacc_affordance",
    "inacc_unit",
    "def_rating",
    "aff_rating",
    "helpfulness",
    "overall",
]

ABLATION_METRICS = ("helpfulness", "overall", "definition", "affordance")

SIGNIFICANCE_ALPHA = 0.05


@dataclass(frozen=True)
class PropertyRating:
    sample_id: str
    config_id: str
    annotator_id: str
    comprehended_initially: bool
    inaccurate_name: bool
    inaccurate_value: bool
    inaccurate_definition: bool
    inaccurate_affordance: bool
    inaccurate_unit: bool
    definition_rating: int
    affordance_rating: int
    helpfulness_rating: Optional[int]
    overall_rating: int


def validate_rating(rating: PropertyRating) -> None:
    """Full (write-side) invariant check."""
    for label, value in (
        ("sample_id", rating.sample_id),
        ("config_id", rating.config_id),
        ("annotator_id", rating.annotator_id),
    ):
        if not value or not value.strip():
            raise ValidationError(f"{label} empty")
    for label, value in (
        ("definition_rating", rating.definition_rating),
        ("affordance_rating", rating.affordance_rating),
        ("overall_rating", rating.overall_rating),
    ):
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
            raise ValidationError(f"{label} must be an integer in 1..5, got {value!r}")
    if rating.comprehended_initially:
        if rating.helpfulness_rating is not None:
            raise ValidationError("helpfulness must be absent when comprehended")
    else:
        if rating.helpfulness_rating is None:
            raise ValidationError("helpfulness required when not comprehended")
        if not 1 <= rating.helpfulness_rating <= 5:
            raise ValidationError(
                f"helpfulness must be in 1..5, got {rating.helpfulness_rating!r}"
            )


def is_passed(rating: PropertyRating) -> bool:
    """Error-free and maximally rated: no inaccuracy flag, all scores at 5."""
    return (
        not rating.inaccurate_name
        and not rating.inaccurate_value
        and not rating.inaccurate_definition
        and not rating.inaccurate_affordance
        and not rating.inaccurate_unit
        and rating.definition_rating == 5
        and rating.affordance_rating == 5
        and rating.overall_rating == 5
    )


def pass_rate(ratings: Sequence[PropertyRating]) -> float:
    if not ratings:
        raise EmptySampleError("pass_rate over zero ratings")
    return sum(1 for r in ratings if is_passed(r)) / len(ratings)


def helpfulness_score(ratings: Sequence[PropertyRating]) -> Optional[float]:
    """Mean helpfulness over the confusing (not initially comprehended) cases."""
    scores = [
        r.helpfulness_rating
        for r in ratings
        if not r.comprehended_initially and r.helpfulness_rating is not None
    ]
    if not scores:
        return None
    return fmean(scores)


def inaccuracy_rates(ratings: Sequence[PropertyRating]) -> dict[str, float]:
    if not ratings:
        raise EmptySampleError("inaccuracy_rates over zero ratings")
    n = len(ratings)
    return {
        "name": sum(1 for r in ratings if r.inaccurate_name) / n,
        "value": sum(1 for r in ratings if r.inaccurate_value) / n,
        "definition": sum(1 for r in ratings if r.inaccurate_definition) / n,
        "affordance": sum(1 for r in ratings if r.inaccurate_affordance) / n,
        "unit": sum(1 for r in ratings if r.inaccurate_unit) / n,
    }


# --- Student-t machinery ---------------------------------------------------


def _incomplete_beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), evaluated with the modified Lentz method."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 500):
        m2 = 2 * m
        coef = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coef = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to about 1e-12 relative accuracy for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the side where the
    # continued fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _incomplete_beta_cf(a, b, x) / a
    return 1.0 - front * _incomplete_beta_cf(b, a, 1.0 - x) / b


def student_t_two_tailed_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for T Student-t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t))


def welch_t_test(
    sample_a: Sequence[float], sample_b: Sequence[float]
) -> tuple[float, float, float]:
    """Welch unequal-variances t-test; returns (t, df, two-tailed p).

    t = (mean_a - mean_b) / sqrt(s2_a/n_a + s2_b/n_b) with sample variances,
    df by Welch-Satterthwaite. Needs at least two observations per sample;
    two zero-variance samples raise DegenerateVarianceError carrying the
    conventional result (p=1 for equal means, p=0 otherwise).
    """
    n_a, n_b = len(sample_a), len(sample_b)
    if n_a < 2 or n_b < 2:
        raise InsufficientSampleError(
            f"need at least 2 observations per sample, got {n_a} and {n_b}"
        )
    m_a, m_b = fmean(sample_a), fmean(sample_b)
    v_a = sum((x - m_a) ** 2 for x in sample_a) / (n_a - 1)
    v_b = sum((x - m_b) ** 2 for x in sample_b) / (n_b - 1)
    se_a, se_b = v_a / n_a, v_b / n_b
    if se_a + se_b == 0.0:
        df = float(n_a + n_b - 2)
        if m_a == m_b:
            raise DegenerateVarianceError(
                "both variances zero, means equal", t=0.0, df=df, p=1.0
            )
        raise DegenerateVarianceError(
            "both variances zero, means differ",
            t=math.copysign(math.inf, m_a - m_b),
            df=df,
            p=0.0,
        )
    t = (m_a - m_b) / math.sqrt(se_a + se_b)
    df = (se_a + se_b) ** 2 / (
        se_a**2 / (n_a - 1) + se_b**2 / (n_b - 1)
    )
    return t, df, student_t_two_tailed_p(t, df)


# --- Report assembly -------------------------------------------------------


@dataclass(frozen=True)
class ConfigMetrics:
    config_id: str
    sample_count: int
    pass_rate: float
    helpfulness_score: Optional[float]
    mean_overall: float
    mean_definition: float
    mean_affordance: float
    inaccuracy_rates: dict[str, float]


@dataclass(frozen=True)
class AblationCell:
    model: str
    metric: str
    available: bool
    t: Optional[float] = None
    df: Optional[float] = None
    p: Optional[float] = None
    significant: Optional[bool] = None
    note: Optional[str] = None


@dataclass(frozen=True)
class MetricsReport:
    configs: tuple[ConfigMetrics, ...]
    ablation: tuple[AblationCell, ...] = ()
    duration_ratio: dict[str, float] = field(default_factory=dict)


def split_config_id(config_id: str) -> tuple[str, Optional[bool]]:
    """"<model>:rag" / "<model>:norag" -> (model, rag?); unknown suffix -> None."""
    if ":" in config_id:
        model, _, mech = config_id.rpartition(":")
        if mech == "rag":
            return model, True
        if mech == "norag":
            return model, False
    return config_id, None


def _config_metrics(config_id: str, ratings: Sequence[PropertyRating]) -> ConfigMetrics:
    return ConfigMetrics(
        config_id=config_id,
        sample_count=len(ratings),
        pass_rate=pass_rate(ratings),
        helpfulness_score=helpfulness_score(ratings),
        mean_overall=fmean(r.overall_rating for r in ratings),
        mean_definition=fmean(r.definition_rating for r in ratings),
        mean_affordance=fmean(r.affordance_rating for r in ratings),
        inaccuracy_rates=inaccuracy_rates(ratings),
    )


def _metric_sample(ratings: Sequence[PropertyRating], metric: str) -> list[float]:
    if metric == "helpfulness":
        return [
            float(r.helpfulness_rating)
            for r in ratings
            if not r.comprehended_initially and r.helpfulness_rating is not None
        ]
    attr = {
        "overall": "overall_rating",
        "definition": "definition_rating",
        "affordance": "affordance_rating",
    }[metric]
    return [float(getattr(r, attr)) for r in ratings]


def ablation_report(
    ratings: Iterable[PropertyRating],
    *,
    durations_ms: Optional[Mapping[str, Sequence[float]]] = None,
    alpha: float = SIGNIFICANCE_ALPHA,
) -> MetricsReport:
    """Per-configuration metrics plus per-model RAG-vs-no-RAG Welch tests.

    Cells whose samples are too small stay in the report marked
    unavailable instead of failing the whole run.
    """
    by_config: dict[str, list[PropertyRating]] = {}
    for rating in ratings:
        by_config.setdefault(rating.config_id, []).append(rating)

    configs = tuple(
        _config_metrics(config_id, group)
        for config_id, group in sorted(by_config.items())
    )

    by_model: dict[str, dict[bool, list[PropertyRating]]] = {}
    for config_id, group in by_config.items():
        model, rag = split_config_id(config_id)
        if rag is None:
            continue
        by_model.setdefault(model, {})[rag] = group

    cells: list[AblationCell] = []
    for model in sorted(by_model):
        groups = by_model[model]
        for metric in ABLATION_METRICS:
            if True not in groups or False not in groups:
                cells.append(
                    AblationCell(model, metric, available=False, note="missing configuration")
                )
                continue
            sample_rag = _metric_sample(groups[True], metric)
            sample_base = _metric_sample(groups[False], metric)
            try:
                t, df, p = welch_t_test(sample_rag, sample_base)
            except InsufficientSampleError as exc:
                cells.append(AblationCell(model, metric, available=False, note=str(exc)))
                continue
            except DegenerateVarianceError as exc:
                t, df, p = exc.t, exc.df, exc.p
            cells.append(
                AblationCell(
                    model, metric, available=True, t=t, df=df, p=p,
                    significant=p < alpha,
                )
            )

    duration_ratio: dict[str, float] = {}
    if durations_ms:
        model_durations: dict[str, dict[bool, list[float]]] = {}
        for config_id, values in durations_ms.items():
            model, rag = split_config_id(config_id)
            if rag is None or not values:
                continue
            model_durations.setdefault(model, {}).setdefault(rag, []).extend(values)
        for model in sorted(model_durations):
            sides = model_durations[model]
            if True in sides and False in sides and fmean(sides[False]) > 0:
                duration_ratio[model] = fmean(sides[True]) / fmean(sides[False])

    return MetricsReport(configs=configs, ablation=tuple(cells), duration_ratio=duration_ratio)


def report_to_dict(report: MetricsReport) -> dict[str, Any]:
    return {
        "configs": [
            {
                "configId": c.config_id,
                "sampleCount": c.sample_count,
                "passRate": c.pass_rate,
                "helpfulnessScore": c.helpfulness_score,
                "meanOverall": c.mean_overall,
                "meanDefinition": c.mean_definition,
                "meanAffordance": c.mean_affordance,
                "inaccuracyRates": c.inaccuracy_rates,
            }
            for c in report.configs
        ],
        "ablation": [
            {
                "model": cell.model,
                "metric": cell.metric,
                "available": cell.available,
                "t": cell.t,
                "df": cell.df,
                "p": cell.p,
                "significant": cell.significant,
                "note": cell.note,
            }
            for cell in report.ablation
        ],
        "durationRatio": report.duration_ratio,
    }


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def report_to_text(report: MetricsReport) -> str:
    """Plain-text table of the same report."""
    lines: list[str] = []
    lines.append(
        f"{'config':30} {'n':>5} {'pass':>7} {'helpful':>8} {'overall':>8} "
        f"{'defn':>6} {'afford':>7}"
    )
    for c in report.configs:
        helpful = f"{c.helpfulness_score:.3f}" if c.helpfulness_score is not None else "n/a"
        lines.append(
            f"{c.config_id:30} {c.sample_count:>5} {c.pass_rate:>7.3f} {helpful:>8} "
            f"{c.mean_overall:>8.3f} {c.mean_definition:>6.3f} {c.mean_affordance:>7.3f}"
        )
        rates = " ".join(f"{k}={v:.3f}" for k, v in c.inaccuracy_rates.items())
        lines.append(f"{'':30} inaccuracy: {rates}")
    if report.ablation:
        lines.append("")
        lines.append(f"{'model':20} {'metric':12} {'t':>10} {'df':>9} {'p':>11} sig@0.05")
        for cell in report.ablation:
            if not cell.available:
                lines.append(f"{cell.model:20} {cell.metric:12} unavailable: {cell.note}")
                continue
            lines.append(
                f"{cell.model:20} {cell.metric:12} {cell.t:>10.4f} {cell.df:>9.2f} "
                f"{cell.p:>11.6f} {'yes' if cell.significant else 'no'}"
            )
    for model, ratio in sorted(report.duration_ratio.items()):
        lines.append(f"mean duration ratio rag/norag for {model}: {ratio:.2f}x")
    return "\n".join(lines) + "\n"


# --- CSV interchange --------------------------------------------------------

_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


def _parse_bool(text: str, column: str, row: int) -> bool:
    norm = text.strip().lower()
    if norm in _TRUE:
        return True
    if norm in _FALSE:
        return False
    raise FormatError(f"column {column}: not a boolean: {text!r}", line=row)


def _parse_score(text: str, column: str, row: int) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise FormatError(f"column {column}: not an integer: {text!r}", line=row) from None
    if not 1 <= value <= 5:
        raise FormatError(f"column {column}: out of range 1..5: {value}", line=row)
    return value


def rating_to_row(rating: PropertyRating) -> list[str]:
    validate_rating(rating)
    return [
        rating.sample_id,
        rating.config_id,
        rating.annotator_id,
        "true" if rating.comprehended_initially else "false",
        "true" if rating.inaccurate_name else "false",
        "true" if rating.inaccurate_value else "false",
        "true" if rating.inaccurate_definition else "false",
        "true" if rating.inaccurate_affordance else "false",
        "true" if rating.inaccurate_unit else "false",
        str(rating.definition_rating),
        str(rating.affordance_rating),
        "" if rating.helpfulness_rating is None else str(rating.helpfulness_rating),
        str(rating.overall_rating),
    ]


def read_ratings_csv(text: str) -> list[PropertyRating]:
    """Parse the ratings CSV.

    Read-side leniency: a helpfulness value on a comprehended case is
    dropped with a warning instead of rejecting the row (annotation exports
    are messy); everything else is validated strictly.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty ratings file") from None
    if [h.strip() for h in header] != RATINGS_CSV_HEADER:
        raise FormatError(f"unexpected header: {header!r}", line=1)
    ratings: list[PropertyRating] = []
    for row_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(RATINGS_CSV_HEADER):
            raise FormatError(
                f"expected {len(RATINGS_CSV_HEADER)} columns, got {len(row)}",
                line=row_number,
            )
        comprehended = _parse_bool(row[3], "comprehended", row_number)
        helpfulness_text = row[11].strip()
        helpfulness: Optional[int] = None
        if helpfulness_text:
            helpfulness = _parse_score(row[11], "helpfulness", row_number)
            if comprehended:
                log.warning(
                    "row %d: helpfulness %d on a comprehended case, ignoring",
                    row_number,
                    helpfulness,
                )
                helpfulness = None
        elif not comprehended:
            raise FormatError(
                "helpfulness required when comprehended is false", line=row_number
            )
        rating = PropertyRating(
            sample_id=row[0].strip(),
            config_id=row[1].strip(),
            annotator_id=row[2].strip(),
            comprehended_initially=comprehended,
            inaccurate_name=_parse_bool(row[4], "inacc_name", row_number),
            inaccurate_value=_parse_bool(row[5], "inacc_value", row_number),
            inaccurate_definition=_parse_bool(row[6], "inacc_definition", row_number),
            inaccurate_affordance=_parse_bool(row[7], "inacc_affordance", row_number),
            inaccurate_unit=_parse_bool(row[8], "inacc_unit", row_number),
            definition_rating=_parse_score(row[9], "def_rating", row_number),
            affordance_rating=_parse_score(row[10], "aff_rating", row_number),
            helpfulness_rating=helpfulness,
            overall_rating=_parse_score(row[12], "overall", row_number),
        )
        try:
            validate_rating(rating)
        except ValidationError as exc:
            raise FormatError(str(exc), line=row_number) from exc
        ratings.append(rating)
    return ratings


def write_ratings_csv(ratings: Iterable[PropertyRating]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RATINGS_CSV_HEADER)
    for rating in ratings:
        writer.writerow(rating_to_row(rating))
    return out.getvalue()
