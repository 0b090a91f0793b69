"""Compiled twin of the reference engine.

Runs a whole GA run in one nopython call over bit-packed uint64 genomes,
consuming random draws in exactly the order of `muga.engine.step`, so a run
here is bit-identical to the reference engine for the same (config, seed).
The parity test suite enforces this; treat any edit to the draw protocol in
either place as an edit to both.

The kernel releases the GIL, so a thread pool over runs gives real
parallelism where cores are available.
"""

from __future__ import annotations

import numpy as np
from numba import int64, njit, uint64

from .bitcore import FitnessKind
from .instrumentation import LevelTable, RunRecord

ALL64 = uint64(0xFFFFFFFFFFFFFFFF)

TIE_OFFSPRING = 0
TIE_UNIFORM = 1
TIE_DIVERSITY = 2


@njit(inline="always")
def _popcount(x):
    x = uint64(x)
    x = uint64(x - ((x >> uint64(1)) & uint64(0x5555555555555555)))
    x = uint64((x & uint64(0x3333333333333333)) + ((x >> uint64(2)) & uint64(0x3333333333333333)))
    x = uint64((x + (x >> uint64(4))) & uint64(0x0F0F0F0F0F0F0F0F))
    return int64(uint64(x * uint64(0x0101010101010101)) >> uint64(56))


@njit(inline="always")
def _rotl(x, k):
    return uint64((x << uint64(k)) | (x >> uint64(64 - k)))


@njit(inline="always")
def _mix64(z):
    z = uint64((z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9))
    z = uint64((z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB))
    return uint64(z ^ (z >> uint64(31)))


@njit(inline="always")
def _seed_state(seed, s):
    state = uint64(seed)
    state = uint64(state + uint64(0x9E3779B97F4A7C15))
    s[0] = _mix64(state)
    state = uint64(state + uint64(0x9E3779B97F4A7C15))
    s[1] = _mix64(state)


@njit(inline="always")
def _next_u64(s):
    s0 = s[0]
    s1 = s[1]
    result = uint64(_rotl(uint64(s0 + s1), 17) + s0)
    s1 = uint64(s1 ^ s0)
    s[0] = uint64(_rotl(s0, 49) ^ s1 ^ uint64(s1 << uint64(21)))
    s[1] = _rotl(s1, 28)
    return result


@njit(inline="always")
def _next_double(s):
    return (_next_u64(s) >> uint64(11)) * (2.0 ** -53)


@njit(inline="always")
def _next_below(s, m):
    return int64(_next_u64(s) % uint64(m))


@njit(inline="always")
def _binomial(s, n, p, p_zero, odds):
    u = _next_double(s)
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    pmf = p_zero
    cdf = pmf
    k = 0
    while u > cdf and k < n:
        k += 1
        pmf = pmf * odds * (n - k + 1) / k
        cdf += pmf
    return k


@njit(inline="always")
def _leading_ones(vec, W):
    total = 0
    for w in range(W):
        word = vec[w]
        if word == ALL64:
            total += 64
            continue
        x = uint64(word ^ uint64(word + uint64(1)))
        return total + _popcount(x) - 1
    return total  # every word saturated: only possible when 64 divides n


@njit(inline="always")
def _s_total(pop, mu, W):
    total = int64(0)
    for a in range(mu):
        for b in range(a + 1, mu):
            for w in range(W):
                total += _popcount(uint64(pop[a, w] ^ pop[b, w]))
    return 2 * total


@njit(inline="always")
def _suffix_diversity(pop, mu, W, n, best):
    # average pairwise density over positions best+2..n, 0.0 if empty or mu<2
    width = n - best - 1
    if mu < 2 or width <= 0:
        return 0.0
    prefix = best + 1
    w0 = prefix >> 6
    off = prefix & 63
    keep = uint64(ALL64 << uint64(off))
    total = int64(0)
    for a in range(mu):
        for b in range(a + 1, mu):
            for w in range(w0, W):
                x = uint64(pop[a, w] ^ pop[b, w])
                if w == w0 and off != 0:
                    x = uint64(x & keep)
                total += _popcount(x)
    return 2 * total / (mu * (mu - 1) * width)


@njit(cache=True, nogil=True)
def ga_run(n, mu, W, lastmask, p, p_zero, odds, pc, tie_kind, init_random,
           adaptive, flat, seed, max_iters, trace_every):
    s = np.empty(2, dtype=np.uint64)
    _seed_state(uint64(seed), s)

    pop = np.zeros((mu, W), dtype=np.uint64)
    fit = np.zeros(mu, dtype=np.int64)
    child = np.zeros(W, dtype=np.uint64)
    flips = np.zeros(n, dtype=np.int64)

    # --- init population (mu counted evaluations) ---
    if init_random:
        for m in range(mu):
            for w in range(W):
                word = _next_u64(s)
                if w == W - 1:
                    word = uint64(word & lastmask)
                pop[m, w] = word
    for m in range(mu):
        fit[m] = 0 if flat else _leading_ones(pop[m], W)

    found_at = -1
    if not flat:
        for m in range(mu):
            if fit[m] == n:
                found_at = m + 1
                break

    # --- level tracker state ---
    cur_max = fit[0]
    cur_min = fit[0]
    for m in range(1, mu):
        if fit[m] > cur_max:
            cur_max = fit[m]
        if fit[m] < cur_min:
            cur_min = fit[m]
    cur_level = cur_max
    cur_t_in = 0
    cur_t_cons = 0 if cur_min == cur_max else -1

    nrows = 0
    r_level = np.empty(n + 1, dtype=np.int64)
    r_tin = np.empty(n + 1, dtype=np.int64)
    r_tout = np.empty(n + 1, dtype=np.int64)
    r_tcons = np.empty(n + 1, dtype=np.int64)
    r_succ = np.empty(n + 1, dtype=np.int64)
    r_cx = np.empty(n + 1, dtype=np.int64)
    r_inter = np.empty(n + 1, dtype=np.int64)
    r_d = np.empty(n + 1, dtype=np.float64)

    # --- trace buffers (grow by doubling) ---
    cap = 1024
    tr_t = np.empty(cap, dtype=np.int64)
    tr_f = np.empty(cap, dtype=np.int64)
    tr_s = np.empty(cap, dtype=np.int64)
    tr_d = np.empty(cap, dtype=np.float64)
    tlen = 0
    if trace_every > 0:
        tr_t[0] = 0
        tr_f[0] = cur_max
        tr_s[0] = _s_total(pop, mu, W)
        tr_d[0] = _suffix_diversity(pop, mu, W, n, cur_max)
        tlen = 1

    evaluations = mu
    t = 0
    found = found_at >= 0

    while not found and t < max_iters:
        # effective crossover probability
        if adaptive:
            p_eff = 0.0 if cur_min == cur_max else 1.0
        else:
            p_eff = pc

        use_cx = _next_double(s) < p_eff
        inter = -1
        if use_cx:
            i = _next_below(s, mu)
            j = _next_below(s, mu - 1)
            if j >= i:
                j += 1
            for w in range(W):
                mask = _next_u64(s)
                child[w] = uint64((pop[i, w] & mask) | (pop[j, w] & uint64(~mask)))
            # score the pre-mutation product for the level bookkeeping
            inter = 0 if flat else _leading_ones(child, W)
        else:
            i = _next_below(s, mu)
            for w in range(W):
                child[w] = pop[i, w]

        # mutation: binomial flip count, then distinct positions
        k = _binomial(s, n, p, p_zero, odds)
        for idx in range(k):
            while True:
                pos = _next_below(s, n)
                dup = False
                for q in range(idx):
                    if flips[q] == pos:
                        dup = True
                        break
                if not dup:
                    break
            flips[idx] = pos
            child[pos >> 6] = uint64(child[pos >> 6] ^ (uint64(1) << uint64(pos & 63)))

        f2 = 0 if flat else _leading_ones(child, W)
        evaluations += 1

        # uniform choice among the least-fit members
        fmin = fit[0]
        for m in range(1, mu):
            if fit[m] < fmin:
                fmin = fit[m]
        count = 0
        for m in range(mu):
            if fit[m] == fmin:
                count += 1
        r = _next_below(s, count)
        z = -1
        c = 0
        for m in range(mu):
            if fit[m] == fmin:
                if c == r:
                    z = m
                    break
                c += 1

        if f2 > fmin:
            accepted = True
        elif f2 == fmin:
            if tie_kind == TIE_OFFSPRING:
                accepted = True
            elif tie_kind == TIE_UNIFORM:
                accepted = _next_double(s) < 0.5
            else:
                sy = int64(0)
                sz = int64(0)
                for m in range(mu):
                    if m == z:
                        continue
                    for w in range(W):
                        sy += _popcount(uint64(child[w] ^ pop[m, w]))
                        sz += _popcount(uint64(pop[z, w] ^ pop[m, w]))
                accepted = sy >= sz
        else:
            accepted = False

        d_before = 0.0
        improving = accepted and f2 > cur_max
        if improving:
            d_before = _suffix_diversity(pop, mu, W, n, cur_max)

        if accepted:
            for w in range(W):
                pop[z, w] = child[w]
            fit[z] = f2

        t += 1
        if improving:
            new_max = f2
        else:
            new_max = cur_max
        cur_min = fit[0]
        for m in range(1, mu):
            if fit[m] < cur_min:
                cur_min = fit[m]
        consolidated = cur_min == new_max

        # level bookkeeping, identical to the reference tracker
        if new_max > cur_level:
            r_level[nrows] = cur_level
            r_tin[nrows] = cur_t_in
            r_tout[nrows] = t - 1
            r_tcons[nrows] = cur_t_cons
            r_succ[nrows] = new_max
            r_cx[nrows] = 1 if use_cx else 0
            r_inter[nrows] = inter
            r_d[nrows] = d_before
            nrows += 1
            cur_level = new_max
            cur_t_in = t
            cur_t_cons = -1
        if consolidated and cur_t_cons < 0:
            cur_t_cons = t

        cur_max = new_max

        if trace_every > 0 and t % trace_every == 0:
            if tlen == cap:
                cap *= 2
                new_t = np.empty(cap, dtype=np.int64)
                new_f = np.empty(cap, dtype=np.int64)
                new_s = np.empty(cap, dtype=np.int64)
                new_d = np.empty(cap, dtype=np.float64)
                new_t[:tlen] = tr_t
                new_f[:tlen] = tr_f
                new_s[:tlen] = tr_s
                new_d[:tlen] = tr_d
                tr_t, tr_f, tr_s, tr_d = new_t, new_f, new_s, new_d
            tr_t[tlen] = t
            tr_f[tlen] = cur_max
            tr_s[tlen] = _s_total(pop, mu, W)
            tr_d[tlen] = _suffix_diversity(pop, mu, W, n, cur_max)
            tlen += 1

        if not flat and f2 == n:
            found = True

    if found_at >= 0:
        evaluations = found_at

    censored = 0 if found else 1
    return (evaluations, censored, nrows,
            r_level[:nrows].copy(), r_tin[:nrows].copy(), r_tout[:nrows].copy(),
            r_tcons[:nrows].copy(), r_succ[:nrows].copy(), r_cx[:nrows].copy(),
            r_inter[:nrows].copy(), r_d[:nrows].copy(),
            tr_t[:tlen].copy(), tr_f[:tlen].copy(), tr_s[:tlen].copy(), tr_d[:tlen].copy())


_TIE_CODE = {"offspring": TIE_OFFSPRING, "uniform": TIE_UNIFORM, "diversity": TIE_DIVERSITY}


def run_kernel_raw(config, seed: int, trace_every: int):
    """Invoke the compiled engine for one run; returns the raw kernel tuple."""
    params = config.mutation_params
    n = config.n
    rem = n & 63
    lastmask = np.uint64((1 << rem) - 1) if rem else np.uint64(0xFFFFFFFFFFFFFFFF)
    return ga_run(
        n, config.mu, (n + 63) // 64, lastmask,
        params.rate, params.p_clone,
        params.odds if params.rate < 1.0 else 0.0,  # unreachable at rate 1, keep finite
        float(config.p_c), _TIE_CODE[config.tie_break.value],
        config.init.value == "random", config.adaptive_pc,
        config.fitness is FitnessKind.FLAT,
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF), config.iteration_cap, trace_every,
    )


def run_kernel(config, seed: int | None = None, trace_every: int | None = None,
               run_index: int = 0) -> RunRecord:
    """Run the compiled engine and package the result like the reference one."""
    if seed is None:
        seed = config.seed
    if trace_every is None:
        trace_every = max(1, config.n // 10)
    (evaluations, censored, nrows, r_level, r_tin, r_tout, r_tcons, r_succ,
     r_cx, r_inter, r_d, tr_t, tr_f, tr_s, tr_d) = run_kernel_raw(config, seed, trace_every)
    levels = None
    if not censored:
        levels = LevelTable(config.n, r_level, r_tin, r_tout, r_tcons,
                            r_succ, r_cx, r_inter, r_d)
    trace = [(int(a), int(b), int(c), float(d))
             for a, b, c, d in zip(tr_t, tr_f, tr_s, tr_d)]
    return RunRecord(
        run_index=run_index,
        seed=seed,
        n=config.n,
        evaluations=int(evaluations),
        censored=bool(censored),
        levels=levels,
        trace=trace,
    )
