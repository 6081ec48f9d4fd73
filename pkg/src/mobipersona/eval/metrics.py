"""Agreement metrics and the paired McNemar comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import DegenerateTruth

EXACT_BELOW = 25  # discordant-pair count under which the exact binomial test is used


def accuracy(truth, pred) -> float:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.size == 0:
        raise ValueError("no predictions to score")
    return float(np.mean(truth == pred))


def confusion(truth, pred) -> tuple[int, int, int, int]:
    """(TP, FN, FP, TN) with HIGH (1) as the positive class."""
    truth = np.asarray(truth).astype(bool)
    pred = np.asarray(pred).astype(bool)
    return (int(np.sum(truth & pred)), int(np.sum(truth & ~pred)),
            int(np.sum(~truth & pred)), int(np.sum(~truth & ~pred)))


def cohen_kappa(truth, pred) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e)."""
    truth = np.asarray(truth)
    if np.unique(truth).size < 2:
        raise DegenerateTruth("kappa needs both classes in the truth labels")
    tp, fn, fp, tn = confusion(truth, pred)
    n = tp + fn + fp + tn
    p_o = (tp + tn) / n
    p_e = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (n * n)
    if p_e == 1.0:
        return 0.0
    return float((p_o - p_e) / (1.0 - p_e))


@dataclass(frozen=True)
class McNemarResult:
    b: int  # A correct, B wrong
    c: int  # A wrong, B correct
    statistic: float  # continuity-corrected chi-square statistic
    p_value: float
    exact: bool  # True when the binomial path produced p_value
    n_pairs: int
    no_discordant_pairs: bool = False


def mcnemar_from_counts(b: int, c: int, n_pairs: int | None = None) -> McNemarResult:
    n = b + c
    n_pairs = n if n_pairs is None else n_pairs
    if n == 0:
        return McNemarResult(0, 0, 0.0, 1.0, True, n_pairs, no_discordant_pairs=True)
    statistic = max(abs(b - c) - 1, 0) ** 2 / n
    if n < EXACT_BELOW:
        p = min(1.0, 2.0 * float(stats.binom.cdf(min(b, c), n, 0.5)))
        return McNemarResult(b, c, float(statistic), p, True, n_pairs)
    return McNemarResult(b, c, float(statistic), float(stats.chi2.sf(statistic, 1)), False, n_pairs)


def mcnemar(run_a, run_b) -> McNemarResult:
    """Pair two runs on their shared (participant, repeat) keys and compare correctness."""
    a = run_a.correct_by_key()
    b_map = run_b.correct_by_key()
    shared = sorted(set(a) & set(b_map))
    if not shared:
        raise ValueError("runs share no (participant, repeat) keys")
    b = sum(1 for k in shared if a[k] and not b_map[k])
    c = sum(1 for k in shared if not a[k] and b_map[k])
    return mcnemar_from_counts(b, c, len(shared))
