"""Independent oracles used to cross-check the toolkit's implementations.

Everything here is deliberately written from the definitions, without
importing the code paths under test: brute-force enumeration, small linear
algebra, and exhaustive KKT-pattern search for the nu-SVC dual.
"""

from __future__ import annotations

import itertools

import numpy as np


def hand_count_stats(sentences, male_pronouns, female_pronouns, occupations):
    """Direct per-sentence enumeration of pronoun totals and pronoun x occupation pairs.

    ``occupations`` is a list of (token-tuple, "M"|"F"). Multi-token surfaces
    are matched greedily, longest first, without overlap, per the documented
    counting semantics.
    """
    occ_sorted = sorted(occupations, key=lambda kv: -len(kv[0]))
    totals = {"M": 0, "F": 0}
    cooc = {("M", "M"): 0, ("M", "F"): 0, ("F", "M"): 0, ("F", "F"): 0}
    n_sentences = 0
    n_tokens = 0
    for tokens in sentences:
        n_sentences += 1
        n_tokens += len(tokens)
        lower = [t.lower() for t in tokens]
        pronoun_occurrences = []
        for tok in lower:
            if tok in male_pronouns:
                pronoun_occurrences.append("M")
            elif tok in female_pronouns:
                pronoun_occurrences.append("F")
        occupation_occurrences = []
        taken = [False] * len(lower)
        i = 0
        while i < len(lower):
            hit = None
            for surface, label in occ_sorted:
                L = len(surface)
                if i + L <= len(lower) and tuple(lower[i : i + L]) == surface and not any(
                    taken[i : i + L]
                ):
                    hit = (L, label)
                    break
            if hit:
                L, label = hit
                occupation_occurrences.append(label)
                for j in range(i, i + L):
                    taken[j] = True
                i += L
            else:
                i += 1
        for g in pronoun_occurrences:
            totals[g] += 1
            for s in occupation_occurrences:
                cooc[(g, s)] += 1
    return {
        "male_total": totals["M"],
        "female_total": totals["F"],
        "cooc": cooc,
        "sentences_seen": n_sentences,
        "tokens_seen": n_tokens,
    }


def nu_svc_exhaustive(K, y, nu):
    """Globally optimal nu-SVC dual objective by exhaustive KKT-pattern search.

    Enumerates every assignment of each alpha_i to {0, 1/l, free}; for each
    pattern solves the stationarity system with the two equality-constraint
    multipliers and keeps the best feasible candidate. Exact for n <= ~8.

    Returns (objective, alpha) minimizing 1/2 a'Qa subject to
    y'a = 0, sum(a) = nu, 0 <= a_i <= 1/l.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    cap = 1.0 / n
    Q = (y[:, None] * y[None, :]) * K
    eps = 1e-9
    best = (np.inf, None)
    for pattern in itertools.product((0, 1, 2), repeat=n):  # 0: zero, 1: cap, 2: free
        alpha = np.zeros(n)
        free = [i for i, p in enumerate(pattern) if p == 2]
        for i, p in enumerate(pattern):
            if p == 1:
                alpha[i] = cap
        m = len(free)
        if m == 0:
            if abs(alpha.sum() - nu) > eps or abs(alpha @ y) > eps:
                continue
        else:
            bound = [i for i in range(n) if pattern[i] != 2]
            M = np.zeros((m + 2, m + 2))
            rhs = np.zeros(m + 2)
            M[:m, :m] = Q[np.ix_(free, free)]
            M[:m, m] = -y[free]
            M[:m, m + 1] = -1.0
            M[m, :m] = y[free]
            M[m + 1, :m] = 1.0
            rhs[:m] = -Q[np.ix_(free, bound)] @ alpha[bound] if bound else 0.0
            rhs[m] = -(y[bound] @ alpha[bound]) if bound else 0.0
            rhs[m + 1] = nu - alpha[bound].sum() if bound else nu
            # lstsq handles the rank-deficient single-class-free case, where
            # the y-row and ones-row coincide; reject inconsistent systems.
            sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
            if not np.all(np.isfinite(sol)) or np.linalg.norm(M @ sol - rhs) > 1e-7:
                continue
            alpha[free] = sol[:m]
            if np.any(alpha[free] < -eps) or np.any(alpha[free] > cap + eps):
                continue
        if abs(alpha.sum() - nu) > 1e-7 or abs(alpha @ y) > 1e-7:
            continue
        obj = 0.5 * alpha @ Q @ alpha
        if obj < best[0]:
            best = (obj, alpha.copy())
    return best


def brute_force_max_assignment(sim):
    """Maximum-total one-to-one matching by enumerating permutations."""
    sim = np.asarray(sim, dtype=float)
    n_rows, n_cols = sim.shape
    best = 0.0
    if n_rows <= n_cols:
        for perm in itertools.permutations(range(n_cols), n_rows):
            best = max(best, sum(sim[r, c] for r, c in enumerate(perm)))
    else:
        for perm in itertools.permutations(range(n_rows), n_cols):
            best = max(best, sum(sim[r, c] for c, r in enumerate(perm)))
    return best


def exact_ar_p(paired_scores):
    """Exact randomization p-value by enumerating all 2^n swap patterns."""
    pairs = np.asarray(paired_scores, dtype=float)
    diffs = pairs[:, 0] - pairs[:, 1]
    n = len(diffs)
    observed = abs(diffs.mean())
    hits = 0
    for bits in itertools.product((1.0, -1.0), repeat=n):
        stat = abs(float(np.mean(np.array(bits) * diffs)))
        if stat >= observed - 1e-12:
            hits += 1
    return hits / 2**n


def charpoly_eigvals_3x3(C):
    """Eigenvalues of a symmetric 3x3 matrix from its characteristic polynomial."""
    C = np.asarray(C, dtype=float)
    tr = np.trace(C)
    minors = (
        C[1, 1] * C[2, 2] - C[1, 2] * C[2, 1]
        + C[0, 0] * C[2, 2] - C[0, 2] * C[2, 0]
        + C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
    )
    det = np.linalg.det(C)
    roots = np.roots([1.0, -tr, minors, -det])
    return np.sort(roots.real)[::-1]
