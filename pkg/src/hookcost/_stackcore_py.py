"""Pure-Python whitelist stack kernel; reference for the compiled version."""

from collections import OrderedDict


def evaluate_encoded(allow, keys, capacities, costs, passes, cache_denials):
    """Run ``passes`` sweeps of ``keys`` through a short-circuiting stack.

    ``allow[m][k]`` is module m's decision for key k.  A capacity of 0
    disables that module's LRU cache; ``cache_denials[m]`` says whether
    module m also caches deny decisions.  Returns per-pass check counts, per-pass
    cache hits, per-pass cost, and the index of the denying module for each
    request (-1 when granted).
    """
    n_mod = len(allow)
    caches = [OrderedDict() if capacities[m] > 0 else None for m in range(n_mod)]
    checks = [[0] * n_mod for _ in range(passes)]
    hits = [[0] * n_mod for _ in range(passes)]
    cost = [0] * passes
    denied_by = [-1] * len(keys)

    for p in range(passes):
        row_checks = checks[p]
        row_hits = hits[p]
        for i, key in enumerate(keys):
            denier = -1
            for m in range(n_mod):
                row_checks[m] += 1
                cache = caches[m]
                if cache is not None and key in cache:
                    cache.move_to_end(key)
                    decision = cache[key]
                    row_hits[m] += 1
                else:
                    decision = allow[m][key]
                    cost[p] += costs[m]
                    if cache is not None and (decision or cache_denials[m]):
                        cache[key] = decision
                        if len(cache) > capacities[m]:
                            cache.popitem(last=False)
                if not decision:
                    denier = m
                    break
            denied_by[i] = denier
    return checks, hits, cost, denied_by
