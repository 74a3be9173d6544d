"""Brute-force reference implementations, written from the textbook
definitions and kept independent of the package engines."""

from fractions import Fraction
import math


def ranked(p):
    return sorted(range(len(p)), key=lambda j: (p[j], j))


def step_up_bruteforce(p, t):
    """U = max{i: p_(i) <= t_i}; reject {j: p_j <= p_(U)}."""
    order = ranked(p)
    U = 0
    for i in range(1, len(p) + 1):
        if p[order[i - 1]] <= t[i - 1]:
            U = i
    if U == 0:
        return 0, set()
    cut = p[order[U - 1]]
    return U, {j for j in range(len(p)) if p[j] <= cut}


def step_down_bruteforce(p, t):
    """U = max{i: p_(1) <= t_1, ..., p_(i) <= t_i}."""
    order = ranked(p)
    U = 0
    for i in range(1, len(p) + 1):
        if all(p[order[j - 1]] <= t[j - 1] for j in range(1, i + 1)):
            U = i
    if U == 0:
        return 0, set()
    cut = p[order[U - 1]]
    return U, {j for j in range(len(p)) if p[j] <= cut}


def bh_classic(p, alpha):
    """Largest r with #{p_j <= r alpha / m} >= r; no sorting involved."""
    m = len(p)
    best = 0
    for r in range(1, m + 1):
        cut = r * alpha / m
        if sum(1 for x in p if x <= cut) >= r:
            best = r
    if best == 0:
        return set()
    cut = best * alpha / m
    return {j for j in range(m) if p[j] <= cut}


def bonferroni_classic(p, alpha):
    return {j for j, x in enumerate(p) if x <= alpha / len(p)}


def single_step_classic(p, alpha, k):
    return {j for j, x in enumerate(p) if x <= k * alpha / len(p)}


def holm_classic(p, alpha):
    """Sequentially reject the smallest remaining p while p <= alpha/(#remaining)."""
    remaining = list(range(len(p)))
    rejected = set()
    while remaining:
        j = min(remaining, key=lambda i: (p[i], i))
        if p[j] <= alpha / len(remaining):
            rejected.add(j)
            remaining.remove(j)
        else:
            break
    return rejected


def lehmann_romano_fer_thresholds(m, alpha, gamma):
    """alpha_i = (floor(gamma i) + 1) alpha / (m + floor(gamma i) + 1 - i), exact floor."""
    g = Fraction(gamma).limit_denominator(10**9)
    out = []
    for i in range(1, m + 1):
        k = math.floor(g * i) + 1
        out.append(k * alpha / (m + k - i))
    return out


def generalized_lr_exact(m, alpha, beta, s_values):
    """Two-branch STP critical values in exact rational arithmetic."""
    alpha = Fraction(alpha).limit_denominator(10**9)
    beta = Fraction(beta).limit_denominator(10**9)
    out = []
    for i in range(1, m + 1):
        k = math.floor(beta * Fraction(s_values[i - 1])) + 1
        out.append(k * alpha / m if i <= k else k * alpha / (m + k - i))
    return out
