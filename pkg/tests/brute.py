"""Brute-force reference implementations, kept independent of the package.

Trees are plain dicts from words (tuples) to labels.  Nothing here imports
from ``treeshift``; tests convert at the boundary.
"""

from itertools import product


def all_words(arity, height):
    out = []
    for k in range(height):
        out.extend(product(range(arity), repeat=k))
    return out


def as_dict(arity, height, labels):
    return dict(zip(all_words(arity, height), labels))


def as_labels(arity, height, tree):
    return tuple(tree[w] for w in all_words(arity, height))


def all_trees(arity, n_labels, height):
    ws = all_words(arity, height)
    for labels in product(range(n_labels), repeat=len(ws)):
        yield dict(zip(ws, labels))


def window(tree, at, k, arity):
    return tuple(tree[at + u] for u in all_words(arity, k))


def windows_ok(tree, height, p, arity, forbidden):
    for k in range(height - p + 1):
        for at in product(range(arity), repeat=k):
            if window(tree, at, p, arity) in forbidden:
                return False
    return True


def extendable_p2(x, d, allowed, n_labels, _memo=None):
    """Binary, p = 2: can a node labeled x grow ``d`` more admissible levels?"""
    memo = {} if _memo is None else _memo
    if d == 0:
        return True
    key = (x, d)
    if key not in memo:
        memo[key] = any(
            (x, a, b) in allowed
            and extendable_p2(a, d - 1, allowed, n_labels, memo)
            and extendable_p2(b, d - 1, allowed, n_labels, memo)
            for a in range(n_labels) for b in range(n_labels)
        )
    return memo[key]


def language_p2(forbidden, n_labels, height, slack=None):
    """B_height of a binary p = 2 SFT, by admissibility plus top-down growth."""
    allowed = {t for t in product(range(n_labels), repeat=3) if t not in forbidden}
    slack = 2 * n_labels**3 + 2 if slack is None else slack
    memo = {}
    out = []
    for tree in all_trees(2, n_labels, height):
        if not windows_ok(tree, height, 2, 2, forbidden):
            continue
        leaves = [w for w in tree if len(w) == height - 1]
        if height == 1:
            if extendable_p2(tree[()], slack, allowed, n_labels, memo):
                out.append(tree)
        elif all(extendable_p2(tree[w], slack, allowed, n_labels, memo) for w in leaves):
            out.append(tree)
    return out


def one_zero_rows(tree):
    by_level = {}
    for w, x in tree.items():
        by_level.setdefault(len(w), []).append(x)
    return all(row.count(0) <= 1 for row in by_level.values())


def no_adjacent_ones(string):
    return all(not (a == 1 and b == 1) for a, b in zip(string, string[1:]))
