"""Independent brute-force metric oracles for the test suite.

Deliberately written as direct transcriptions of the published counting
rules, with integer counts scaled by the number of references, so they
share no structure with the library's fractional-count implementation.
"""

import math
from collections import Counter


def ngrams(tokens, n):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _sari_one_order(src, pred, ref_lists):
    numref = len(ref_lists)
    src_scaled = Counter()
    for g, c in Counter(src).items():
        src_scaled[g] = c * numref
    pred_scaled = Counter()
    for g, c in Counter(pred).items():
        pred_scaled[g] = c * numref
    ref_counts = Counter()
    for ref in ref_lists:
        ref_counts.update(Counter(ref))

    # keep
    kept = src_scaled & pred_scaled
    kept_good = kept & ref_counts
    kept_all = src_scaled & ref_counts
    keep_p_sum = 0.0
    keep_r_sum = 0.0
    for g in kept_good:
        keep_p_sum += kept_good[g] / kept[g]
        keep_r_sum += kept_good[g] / kept_all[g]
    keep_p = keep_p_sum / len(kept) if kept else 0.0
    keep_r = keep_r_sum / len(kept_all) if kept_all else 0.0
    keep_f = (
        2 * keep_p * keep_r / (keep_p + keep_r) if keep_p + keep_r > 0 else 0.0
    )

    # delete (precision only)
    deleted = src_scaled - pred_scaled
    deleted_good = deleted - ref_counts
    del_p_sum = 0.0
    for g in deleted_good:
        del_p_sum += deleted_good[g] / deleted[g]
    del_p = del_p_sum / len(deleted) if deleted else 0.0

    # add (set-based)
    added = set(pred_scaled) - set(src_scaled)
    added_good = added & set(ref_counts)
    addable = set(ref_counts) - set(src_scaled)
    add_p = len(added_good) / len(added) if added else 0.0
    add_r = len(added_good) / len(addable) if addable else 0.0
    add_f = 2 * add_p * add_r / (add_p + add_r) if add_p + add_r > 0 else 0.0

    return keep_f, del_p, add_f


def sari_oracle(src_tokens, pred_tokens, ref_token_lists):
    """Sentence SARI on the 0-100 scale from raw token lists."""
    keep_total = del_total = add_total = 0.0
    for n in range(1, 5):
        keep_f, del_p, add_f = _sari_one_order(
            ngrams(src_tokens, n),
            ngrams(pred_tokens, n),
            [ngrams(r, n) for r in ref_token_lists],
        )
        keep_total += keep_f
        del_total += del_p
        add_total += add_f
    return 100.0 * (keep_total / 4 + del_total / 4 + add_total / 4) / 3


def bleu_oracle(pred_token_lists, ref_token_lists_per_pred, max_order=4):
    """Corpus BLEU on the 0-100 scale from raw token lists.

    Written sentence-by-sentence with explicit clipping, independently of
    the library's accumulator implementation.
    """
    clipped = {n: 0 for n in range(1, max_order + 1)}
    total = {n: 0 for n in range(1, max_order + 1)}
    pred_length = 0
    effective_ref_length = 0
    for pred, refs in zip(pred_token_lists, ref_token_lists_per_pred):
        pred_length += len(pred)
        best = None
        for ref in refs:
            delta = (abs(len(ref) - len(pred)), len(ref))
            if best is None or delta < best:
                best = delta
        effective_ref_length += best[1]
        for n in range(1, max_order + 1):
            pred_ngrams = Counter(ngrams(pred, n))
            for g, c in pred_ngrams.items():
                allowed = max(
                    (Counter(ngrams(ref, n))[g] for ref in refs), default=0
                )
                clipped[n] += min(c, allowed)
            total[n] += sum(pred_ngrams.values())
    score = 0.0
    for n in range(1, max_order + 1):
        if total[n] == 0 or clipped[n] == 0:
            return 0.0
        score += math.log(clipped[n] / total[n])
    score /= max_order
    if pred_length < effective_ref_length:
        score += 1 - effective_ref_length / pred_length
    return 100.0 * math.exp(score)


def max_cosine_mean_oracle(candidate_rows, reference_rows):
    """Brute-force double loop over token vectors."""
    best_sum = 0.0
    for cand in candidate_rows:
        best = None
        for ref in reference_rows:
            dot = sum(a * b for a, b in zip(cand, ref))
            if best is None or dot > best:
                best = dot
        best_sum += best
    return best_sum / len(candidate_rows)
