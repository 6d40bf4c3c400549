"""Corpus-level BLEU for free-text answers.

Configuration is fixed: n-grams up to 4 with uniform weights, brevity
penalty, add-one smoothing applied only to orders whose clipped match
count is zero (n >= 2; a zero unigram count floors the score at 0).
Orders with no n-grams anywhere in the corpus are skipped and the
remaining weights renormalized. Tokenization lowercases and splits into
word runs and single punctuation marks. Scores are scaled to 0..100.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Sequence


class LengthMismatch(ValueError):
    """Prediction and reference lists differ in length (or are empty)."""


_TOKEN = re.compile(r"\w+|[^\w\s]")
_MAX_ORDER = 4


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(predictions: Sequence[str], references: Sequence[str]) -> float:
    if len(predictions) != len(references):
        raise LengthMismatch(
            f"{len(predictions)} predictions vs {len(references)} references"
        )
    if not predictions:
        raise LengthMismatch("empty corpus")
    matched = [0] * (_MAX_ORDER + 1)
    total = [0] * (_MAX_ORDER + 1)
    pred_len = 0
    ref_len = 0
    for pred, ref in zip(predictions, references):
        pred_tokens = tokenize(str(pred))
        ref_tokens = tokenize(str(ref))
        pred_len += len(pred_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, _MAX_ORDER + 1):
            pred_grams = _ngram_counts(pred_tokens, n)
            if not pred_grams:
                continue
            ref_grams = _ngram_counts(ref_tokens, n)
            matched[n] += sum(min(c, ref_grams[g]) for g, c in pred_grams.items())
            total[n] += sum(pred_grams.values())
    if pred_len == 0:
        return 0.0
    active = [n for n in range(1, _MAX_ORDER + 1) if total[n] > 0]
    if not active:
        return 0.0
    log_sum = 0.0
    for n in active:
        m, t = matched[n], total[n]
        if m == 0:
            if n == 1:
                return 0.0
            m, t = m + 1, t + 1
        log_sum += math.log(m / t) / len(active)
    brevity = 1.0 if pred_len > ref_len else math.exp(1.0 - ref_len / pred_len)
    return 100.0 * brevity * math.exp(log_sum)
