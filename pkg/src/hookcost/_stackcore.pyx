# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled whitelist stack kernel.

Same contract as ``hookcost._stackcore_py.evaluate_encoded``.  Each module's
LRU cache is an intrusive doubly linked list over the dense key space, so a
hit, insert or eviction is O(1) with no hashing.
"""

from libc.stdlib cimport free, malloc


cdef struct Lru:
    Py_ssize_t head      # most recently used, -1 when empty
    Py_ssize_t tail      # least recently used
    Py_ssize_t size
    Py_ssize_t capacity
    Py_ssize_t *prev
    Py_ssize_t *next
    signed char *value   # -1 absent, else cached decision


cdef inline void lru_unlink(Lru *c, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t p = c.prev[k]
    cdef Py_ssize_t n = c.next[k]
    if p >= 0:
        c.next[p] = n
    else:
        c.head = n
    if n >= 0:
        c.prev[n] = p
    else:
        c.tail = p


cdef inline void lru_push_front(Lru *c, Py_ssize_t k) noexcept nogil:
    c.prev[k] = -1
    c.next[k] = c.head
    if c.head >= 0:
        c.prev[c.head] = k
    c.head = k
    if c.tail < 0:
        c.tail = k


def evaluate_encoded(allow, keys, capacities, costs, int passes, cache_denials):
    cdef Py_ssize_t n_mod = len(allow)
    cdef Py_ssize_t n_req = len(keys)
    cdef Py_ssize_t n_keys = len(allow[0]) if n_mod else 0
    cdef Py_ssize_t m, i, p, key, victim
    cdef signed char decision
    cdef int denier
    cdef long long pass_cost

    cdef unsigned char *table = <unsigned char *> malloc(max(n_mod * n_keys, 1))
    cdef Py_ssize_t *req = <Py_ssize_t *> malloc(max(n_req, 1) * sizeof(Py_ssize_t))
    cdef long long *mod_cost = <long long *> malloc(max(n_mod, 1) * sizeof(long long))
    cdef unsigned char *keep_deny = <unsigned char *> malloc(max(n_mod, 1))
    cdef Lru *caches = <Lru *> malloc(max(n_mod, 1) * sizeof(Lru))
    cdef long long *chk = <long long *> malloc(max(n_mod, 1) * sizeof(long long))
    cdef long long *hit = <long long *> malloc(max(n_mod, 1) * sizeof(long long))
    cdef int *deny = <int *> malloc(max(n_req, 1) * sizeof(int))
    if not (table and req and mod_cost and keep_deny and caches and chk and hit and deny):
        raise MemoryError()

    for m in range(n_mod):
        caches[m].prev = NULL
        caches[m].next = NULL
        caches[m].value = NULL

    checks_out = []
    hits_out = []
    cost_out = []
    try:
        for m in range(n_mod):
            row = allow[m]
            if len(row) != n_keys:
                raise ValueError("allow rows must have equal length")
            for key in range(n_keys):
                table[m * n_keys + key] = 1 if row[key] else 0
            mod_cost[m] = costs[m]
            keep_deny[m] = 1 if cache_denials[m] else 0
            caches[m].capacity = capacities[m]
            caches[m].head = -1
            caches[m].tail = -1
            caches[m].size = 0
            if caches[m].capacity > 0:
                caches[m].prev = <Py_ssize_t *> malloc(max(n_keys, 1) * sizeof(Py_ssize_t))
                caches[m].next = <Py_ssize_t *> malloc(max(n_keys, 1) * sizeof(Py_ssize_t))
                caches[m].value = <signed char *> malloc(max(n_keys, 1))
                if not (caches[m].prev and caches[m].next and caches[m].value):
                    raise MemoryError()
                for key in range(n_keys):
                    caches[m].value[key] = -1
        for i in range(n_req):
            key = keys[i]
            if n_mod and (key < 0 or key >= n_keys):
                raise IndexError(f"key {key} outside [0, {n_keys})")
            req[i] = key

        for p in range(passes):
            for m in range(n_mod):
                chk[m] = 0
                hit[m] = 0
            pass_cost = 0
            with nogil:
                for i in range(n_req):
                    key = req[i]
                    denier = -1
                    for m in range(n_mod):
                        chk[m] += 1
                        if caches[m].capacity > 0 and caches[m].value[key] >= 0:
                            decision = caches[m].value[key]
                            hit[m] += 1
                            if caches[m].head != key:
                                lru_unlink(&caches[m], key)
                                lru_push_front(&caches[m], key)
                        else:
                            decision = table[m * n_keys + key]
                            pass_cost += mod_cost[m]
                            if caches[m].capacity > 0 and (decision or keep_deny[m]):
                                caches[m].value[key] = decision
                                lru_push_front(&caches[m], key)
                                caches[m].size += 1
                                if caches[m].size > caches[m].capacity:
                                    victim = caches[m].tail
                                    lru_unlink(&caches[m], victim)
                                    caches[m].value[victim] = -1
                                    caches[m].size -= 1
                        if not decision:
                            denier = <int> m
                            break
                    deny[i] = denier
            checks_out.append([chk[m] for m in range(n_mod)])
            hits_out.append([hit[m] for m in range(n_mod)])
            cost_out.append(pass_cost)
        denied_out = [deny[i] for i in range(n_req)] if passes > 0 else [-1] * n_req
    finally:
        for m in range(n_mod):
            free(caches[m].prev)
            free(caches[m].next)
            free(caches[m].value)
        free(table)
        free(req)
        free(mod_cost)
        free(keep_deny)
        free(caches)
        free(chk)
        free(hit)
        free(deny)
    return checks_out, hits_out, cost_out, denied_out
