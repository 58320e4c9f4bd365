"""Score search over qubit counts, shared by both benchmarks."""

from __future__ import annotations

from typing import Callable

SEARCH_MODES = ("linear", "binary")


def search_score(
    passes: Callable[[int], bool], n_max: int, mode: str = "linear"
) -> tuple[int, list[int]]:
    """Largest n <= n_max such that every level 1..n passes.

    ``passes`` is called at most once per level; the probed levels are
    returned in the order they were evaluated.  Binary mode first brackets a
    candidate assuming monotone behaviour, then confirms every level below
    it, so both modes always agree on the score.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if mode not in SEARCH_MODES:
        raise ValueError(f"unknown search mode {mode!r}")
    cache: dict[int, bool] = {}
    order: list[int] = []

    def probe(n: int) -> bool:
        if n not in cache:
            cache[n] = bool(passes(n))
            order.append(n)
        return cache[n]

    if mode == "linear":
        score = 0
        for n in range(1, n_max + 1):
            if not probe(n):
                break
            score = n
        return score, order

    lo, hi = 0, n_max  # lo: known pass (0 is vacuous); answer lies in [lo, hi]
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if probe(mid):
            lo = mid
        else:
            hi = mid - 1
    score = lo
    for n in range(1, lo + 1):
        if not probe(n):
            score = n - 1
            break
    return score, order
