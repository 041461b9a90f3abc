"""Compiled event-level engine for the QECOOL Controller/Unit protocol.

Each token step is resolved in closed form instead of cycle by cycle. For a
sink at ``(i, j)`` the spike routing rule makes the Units form an in-tree
rooted at the sink: spikes run vertically in their own column into the sink
row, then horizontally along it. A single sweep over that tree yields, per
Unit, the departure time of the first spike it sends and the port it was
latched from (own emission wins ties, then N > E > S > W). Those latches are
exactly what the per-cycle simulator in :mod:`qecool.decoder.lockstep`
stores in its ``dir`` registers, so both engines agree cycle for cycle; the
test-suite checks this on random instances.

Timing model (cycles): row skipped by its Row Master 1, token at a Unit
whose Reg[b] is 0 1, matched sink ``2 + arrival + path``, vertical match
``2 + arrival``, unmatched sink ``timeout_base + timeout_per_hop * C``,
Pop 1.
"""

import numpy as np
from numba import njit

INF = 1 << 30

OWN = -1
VERTICAL = 4
NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3

STATUS_OK = 0
STATUS_OVERFLOW = 1
STATUS_STUCK = 2

KIND_PAIR = 0
KIND_WEST = 1
KIND_EAST = 2

# columns of the match record
MATCH_FIELDS = ("t1", "r1", "c1", "kind", "t2", "r2", "c2", "cycle")


@njit(cache=True)
def _first_bit(reg, m, r, c, start):
    for t in range(start, m):
        if reg[t, r, c]:
            return t
    return -1


@njit(cache=True)
def _row_has_bits(reg, m, i):
    for t in range(m):
        for c in range(reg.shape[2]):
            if reg[t, i, c]:
                return True
    return False


@njit(cache=True)
def _layer_clear(reg, t):
    for r in range(reg.shape[1]):
        for c in range(reg.shape[2]):
            if reg[t, r, c]:
                return False
    return True


@njit(cache=True)
def _sweep(reg, m, i, j, b, bdelay, tout, latch):
    """First-departure time and latched port of every Unit for a sink at (i, j)."""
    n_rows = reg.shape[1]
    n_cols = reg.shape[2]
    for c in range(n_cols):
        # rows above the sink row: already visited by the token, spikes go south
        for r in range(0, i):
            best = INF
            port = -2
            t = _first_bit(reg, m, r, c, b)
            if t >= 0:
                best = t - b
                port = OWN
            if r > 0 and tout[r - 1, c] + 1 < best:
                best = tout[r - 1, c] + 1
                port = NORTH
            if c == n_cols - 1 and bdelay + 1 < best:
                best = bdelay + 1
                port = EAST
            if c == 0 and bdelay + 1 < best:
                best = bdelay + 1
                port = WEST
            tout[r, c] = best
            latch[r, c] = port
        # rows below: not yet visited, spikes go north
        for r in range(n_rows - 1, i, -1):
            best = INF
            port = -2
            t = _first_bit(reg, m, r, c, b)
            if t >= 0:
                best = t - b
                port = OWN
            if c == n_cols - 1 and bdelay + 1 < best:
                best = bdelay + 1
                port = EAST
            if r < n_rows - 1 and tout[r + 1, c] + 1 < best:
                best = tout[r + 1, c] + 1
                port = SOUTH
            if c == 0 and bdelay + 1 < best:
                best = bdelay + 1
                port = WEST
            tout[r, c] = best
            latch[r, c] = port
    # sink row, west of the sink: visited, spikes go east
    for x in range(0, j):
        best = INF
        port = -2
        t = _first_bit(reg, m, i, x, b)
        if t >= 0:
            best = t - b
            port = OWN
        if i > 0 and tout[i - 1, x] + 1 < best:
            best = tout[i - 1, x] + 1
            port = NORTH
        if i < n_rows - 1 and tout[i + 1, x] + 1 < best:
            best = tout[i + 1, x] + 1
            port = SOUTH
        w = tout[i, x - 1] + 1 if x > 0 else bdelay + 1
        if w < best:
            best = w
            port = WEST
        tout[i, x] = best
        latch[i, x] = port
    # sink row, east of the sink: not visited, spikes go west
    for x in range(n_cols - 1, j, -1):
        best = INF
        port = -2
        t = _first_bit(reg, m, i, x, b)
        if t >= 0:
            best = t - b
            port = OWN
        if i > 0 and tout[i - 1, x] + 1 < best:
            best = tout[i - 1, x] + 1
            port = NORTH
        e = tout[i, x + 1] + 1 if x < n_cols - 1 else bdelay + 1
        if e < best:
            best = e
            port = EAST
        if i < n_rows - 1 and tout[i + 1, x] + 1 < best:
            best = tout[i + 1, x] + 1
            port = SOUTH
        tout[i, x] = best
        latch[i, x] = port


@njit(cache=True)
def _sink_arrival(reg, m, i, j, b, bdelay, tout):
    """Earliest arrival at the sink and its port; VERTICAL for a same-Unit match."""
    n_rows = reg.shape[1]
    n_cols = reg.shape[2]
    best = INF
    port = -2
    if i > 0 and tout[i - 1, j] + 1 < best:
        best = tout[i - 1, j] + 1
        port = NORTH
    e = tout[i, j + 1] + 1 if j < n_cols - 1 else bdelay + 1
    if e < best:
        best = e
        port = EAST
    if i < n_rows - 1 and tout[i + 1, j] + 1 < best:
        best = tout[i + 1, j] + 1
        port = SOUTH
    w = tout[i, j - 1] + 1 if j > 0 else bdelay + 1
    if w < best:
        best = w
        port = WEST
    t = _first_bit(reg, m, i, j, b + 1)
    if t >= 0 and t - b < best:
        best = t - b
        port = VERTICAL
    return best, port


@njit(cache=True)
def _retrace(i, j, port, latch, corr_h, corr_v):
    """Walk the Syndrome signal back from the sink, flipping data qubits.

    Returns (kind, r, c, path_length) of the spike origin.
    """
    n_cols = latch.shape[1]
    r = i
    c = j
    p = port
    path = 0
    while True:
        path += 1
        if p == NORTH:
            corr_v[r - 1, c] ^= 1
            r -= 1
        elif p == SOUTH:
            corr_v[r, c] ^= 1
            r += 1
        elif p == WEST:
            corr_h[r, c] ^= 1
            if c == 0:
                return KIND_WEST, r, -1, path
            c -= 1
        else:
            corr_h[r, c + 1] ^= 1
            if c == n_cols - 1:
                return KIND_EAST, r, n_cols, path
            c += 1
        p = latch[r, c]
        if p == OWN:
            return KIND_PAIR, r, c, path


@njit(cache=True)
def decode_kernel(
    ev,
    online,
    n_depth,
    th_v,
    n_limit,
    timeout_base,
    timeout_per_hop,
    bdelay,
    cap,
    budget,
    corr_h,
    corr_v,
    matches,
    layer_cycles,
    layer_drain,
):
    """Run the Controller over a whole trial.

    ``ev`` holds detection events as ``(layer, row, col)``. Results are
    written into the output arrays; returns ``(status, n_matches, n_layers,
    total_cycles)`` where ``n_layers`` counts recorded Pops.
    """
    n_layers = ev.shape[0]
    n_rows = ev.shape[1]
    n_cols = ev.shape[2]
    reg = np.zeros((cap, n_rows, n_cols), np.uint8)
    tout = np.zeros((n_rows, n_cols), np.int64)
    latch = np.zeros((n_rows, n_cols), np.int64)
    m = 0
    pushed = 0
    pops = 0
    clock = 0
    active = 0
    last_pop = 0
    n_match = 0
    n_rec = 0
    drain = False
    gate = th_v

    if not online:
        if n_layers > cap:
            return STATUS_OVERFLOW, 0, 0, 0
        for t in range(n_layers):
            reg[t] = ev[t]
        m = n_layers
        pushed = n_layers
    elif n_layers > 0:
        reg[0] = ev[0]
        m = 1
        pushed = 1

    while True:
        popped = False
        hop = 1
        while hop <= n_limit and not popped:
            b = 0
            while b < n_depth and b < m and not popped:
                if m - b > gate:
                    for i in range(n_rows):
                        if not _row_has_bits(reg, m, i):
                            steps = 1
                            cols = 0
                        else:
                            steps = 0
                            cols = n_cols
                        for j in range(cols):
                            if reg[b, i, j] == 0:
                                cost = 1
                            else:
                                _sweep(reg, m, i, j, b, bdelay, tout, latch)
                                k, port = _sink_arrival(reg, m, i, j, b, bdelay, tout)
                                if k > hop:
                                    cost = timeout_base + timeout_per_hop * hop
                                else:
                                    reg[b, i, j] = 0
                                    matches[n_match, 0] = b + pops
                                    matches[n_match, 1] = i
                                    matches[n_match, 2] = j
                                    matches[n_match, 7] = clock
                                    if port == VERTICAL:
                                        t2 = b + k
                                        reg[t2, i, j] = 0
                                        matches[n_match, 3] = KIND_PAIR
                                        matches[n_match, 4] = t2 + pops
                                        matches[n_match, 5] = i
                                        matches[n_match, 6] = j
                                        cost = 2 + k
                                    else:
                                        kind, r2, c2, path = _retrace(i, j, port, latch, corr_h, corr_v)
                                        matches[n_match, 3] = kind
                                        matches[n_match, 5] = r2
                                        matches[n_match, 6] = c2
                                        if kind == KIND_PAIR:
                                            t2 = b + tout[r2, c2]
                                            reg[t2, r2, c2] = 0
                                            matches[n_match, 4] = t2 + pops
                                        else:
                                            matches[n_match, 4] = b + pops
                                        cost = 2 + k + path
                                    n_match += 1
                            steps += cost
                            clock += cost
                            active += cost
                            while online and pushed < n_layers and clock >= pushed * budget:
                                if m == cap:
                                    return STATUS_OVERFLOW, n_match, n_rec, active
                                reg[m] = ev[pushed]
                                m += 1
                                pushed += 1
                        if cols == 0:
                            clock += steps
                            active += steps
                            while online and pushed < n_layers and clock >= pushed * budget:
                                if m == cap:
                                    return STATUS_OVERFLOW, n_match, n_rec, active
                                reg[m] = ev[pushed]
                                m += 1
                                pushed += 1
                    if _layer_clear(reg, 0):
                        # Pop: shift every Reg down by one slot
                        for t in range(m - 1):
                            reg[t] = reg[t + 1]
                        reg[m - 1] = 0
                        m -= 1
                        pops += 1
                        clock += 1
                        active += 1
                        layer_cycles[n_rec] = active - last_pop
                        layer_drain[n_rec] = drain
                        n_rec += 1
                        last_pop = active
                        popped = True
                        while online and pushed < n_layers and clock >= pushed * budget:
                            if m == cap:
                                return STATUS_OVERFLOW, n_match, n_rec, active
                            reg[m] = ev[pushed]
                            m += 1
                            pushed += 1
                b += 1
            hop += 1
        if popped:
            continue
        if online and pushed < n_layers:
            # idle until the next measurement round
            nxt = int(np.ceil(pushed * budget))
            if nxt > clock:
                clock = nxt
            while pushed < n_layers and clock >= pushed * budget:
                if m == cap:
                    return STATUS_OVERFLOW, n_match, n_rec, active
                reg[m] = ev[pushed]
                m += 1
                pushed += 1
            continue
        if m == 0:
            return STATUS_OK, n_match, n_rec, active
        if online and not drain:
            # all rounds are in: lift the vertical gate and flush the Regs
            drain = True
            gate = -1
            continue
        return STATUS_STUCK, n_match, n_rec, active
