"""Corpus-level BLEU and chrF plus tier-aggregated report rendering.

BLEU: modified n-gram precision for orders 1-4 with add-one smoothing on any
order that has zero matches, and the standard brevity penalty.  Tokens come
from the tokenizer module's per-language modes, so Chinese is scored at
character granularity.  chrF: character n-gram F-score, orders 1-6, beta=2,
whitespace stripped before extraction; orders with no n-grams on either side
are skipped when averaging.  Both definitions are fixed and reproducible
within this toolkit; parity with external scorers is out of scope.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .registry import DEFAULT_REGISTRY, Registry, ResourceTier, TIERS_HIGH_TO_LOW, pair_tier
from .tokenizer import TokenizerSpec, segment

BLEU_MAX_ORDER = 4
CHRF_MAX_ORDER = 6
CHRF_BETA = 2.0


@dataclass(frozen=True)
class EvalPair:
    hypothesis: str
    reference: str
    pair: tuple[str, str]

    def __post_init__(self):
        if not self.reference:
            raise ValueError("reference must be nonempty")


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(pairs: Sequence[EvalPair], tokenizer: Optional[TokenizerSpec] = None) -> float:
    """Corpus BLEU in [0, 100]."""
    if not pairs:
        raise ValueError("empty evaluation corpus")
    spec = tokenizer if tokenizer is not None else TokenizerSpec.pipeline_spec()
    matches = [0] * BLEU_MAX_ORDER
    totals = [0] * BLEU_MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for p in pairs:
        lang = p.pair[1]
        hyp = segment(p.hypothesis, lang, spec)
        ref = segment(p.reference, lang, spec)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, BLEU_MAX_ORDER + 1):
            hc = _ngram_counts(hyp, n)
            rc = _ngram_counts(ref, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(0, len(hyp) - n + 1)
    log_sum = 0.0
    for m, t in zip(matches, totals):
        # add-one smoothing exactly when an order has no matches
        p_n = m / t if m > 0 else (m + 1) / (t + 1)
        log_sum += math.log(p_n)
    if hyp_len == 0:
        return 0.0
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_sum / BLEU_MAX_ORDER)


def chrf(pairs: Sequence[EvalPair], max_order: int = CHRF_MAX_ORDER, beta: float = CHRF_BETA) -> float:
    """Corpus chrF in [0, 100]."""
    if not pairs:
        raise ValueError("empty evaluation corpus")
    matches = [0] * max_order
    hyp_totals = [0] * max_order
    ref_totals = [0] * max_order
    for p in pairs:
        hyp = "".join(p.hypothesis.split())
        ref = "".join(p.reference.split())
        for n in range(1, max_order + 1):
            hc = _ngram_counts(hyp, n)
            rc = _ngram_counts(ref, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            hyp_totals[n - 1] += max(0, len(hyp) - n + 1)
            ref_totals[n - 1] += max(0, len(ref) - n + 1)
    precisions = []
    recalls = []
    for m, ht, rt in zip(matches, hyp_totals, ref_totals):
        if ht + rt == 0:
            continue  # order longer than every hypothesis and reference
        precisions.append(m / ht if ht > 0 else 0.0)
        recalls.append(m / rt if rt > 0 else 0.0)
    if not precisions:
        return 0.0
    prec = sum(precisions) / len(precisions)
    rec = sum(recalls) / len(recalls)
    if prec + rec == 0.0:
        return 0.0
    b2 = beta * beta
    return 100.0 * (1.0 + b2) * prec * rec / (b2 * prec + rec)


@dataclass
class EvalReport:
    per_pair: dict[tuple[str, str], dict[str, float]] = field(default_factory=dict)
    tier_means: dict[ResourceTier, dict[str, float]] = field(default_factory=dict)
    overall: dict[str, float] = field(default_factory=dict)


def build_report(
    scores: Mapping[tuple[str, str], Mapping[str, float]],
    registry: Optional[Registry] = None,
) -> EvalReport:
    """Group per-pair scores by the tier of the non-Chinese language and
    average per tier and overall."""
    reg = registry if registry is not None else DEFAULT_REGISTRY
    report = EvalReport()
    by_tier: dict[ResourceTier, list[Mapping[str, float]]] = {}
    metrics: set[str] = set()
    for pair, ms in scores.items():
        tier = pair_tier(pair, reg)
        report.per_pair[pair] = dict(ms)
        by_tier.setdefault(tier, []).append(ms)
        metrics.update(ms)
    for tier, rows in by_tier.items():
        report.tier_means[tier] = {
            m: sum(r[m] for r in rows) / len(rows) for m in sorted(metrics)
        }
    if report.per_pair:
        rows = list(report.per_pair.values())
        report.overall = {m: sum(r[m] for r in rows) / len(rows) for m in sorted(metrics)}
    return report


TIER_HEADERS = ("High Resource", "Medium Resource", "Low Resource", "Very Low Resource")


def render_report(report: EvalReport, model_name: str = "model", metric: str = "bleu") -> str:
    """Four-column tier table (paper layout) plus a per-pair long table."""
    lines = [f"metric: {metric}", "Model " + " ".join(TIER_HEADERS)]
    cells = []
    for tier in TIERS_HIGH_TO_LOW:
        if tier in report.tier_means and metric in report.tier_means[tier]:
            cells.append(f"{report.tier_means[tier][metric]:.4f}")
        else:
            cells.append("-")
    lines.append(f"{model_name} " + " ".join(cells))
    if report.overall:
        lines.append(f"overall {report.overall.get(metric, float('nan')):.4f}")
    lines.append("")
    lines.append("lang_pair\t" + "\t".join(sorted({m for v in report.per_pair.values() for m in v})))
    for pair in sorted(report.per_pair):
        ms = report.per_pair[pair]
        vals = "\t".join(f"{ms[m]:.4f}" for m in sorted(ms))
        lines.append(f"{pair[0]}-{pair[1]}\t{vals}")
    return "\n".join(lines) + "\n"


def report_tsv(report: EvalReport) -> str:
    """Machine-readable scores: one line per pair, per tier, and overall."""
    lines = []
    for pair in sorted(report.per_pair):
        for m in sorted(report.per_pair[pair]):
            lines.append(f"pair\t{pair[0]}-{pair[1]}\t{m}\t{report.per_pair[pair][m]:.6f}")
    for tier in TIERS_HIGH_TO_LOW:
        if tier in report.tier_means:
            for m in sorted(report.tier_means[tier]):
                lines.append(f"tier\t{tier.value}\t{m}\t{report.tier_means[tier][m]:.6f}")
    for m in sorted(report.overall):
        lines.append(f"overall\t-\t{m}\t{report.overall[m]:.6f}")
    return "\n".join(lines) + "\n"
