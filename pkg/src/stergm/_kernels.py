"""Compiled inner loops for the phase samplers."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def mh_toggle(adj, deg, ti, tj, base, c_deg1, proposals, log_u):
    """Metropolis-Hastings over a fixed set of toggleable dyads, in place.

    The log-odds of dyad ``k`` being on given the rest of the network is
    ``base[k] + c_deg1 * delta_degree1``. Returns the number of accepted
    toggles.
    """
    accepted = 0
    for s in range(proposals.size):
        k = proposals[s]
        i = ti[k]
        j = tj[k]
        on = adj[i, j]
        di = deg[i] - on
        dj = deg[j] - on
        delta = 0
        if di == 0:
            delta += 1
        elif di == 1:
            delta -= 1
        if dj == 0:
            delta += 1
        elif dj == 1:
            delta -= 1
        lo = base[k] + c_deg1 * delta
        if on:
            if log_u[s] < -lo:
                adj[i, j] = 0
                adj[j, i] = 0
                deg[i] -= 1
                deg[j] -= 1
                accepted += 1
        elif log_u[s] < lo:
            adj[i, j] = 1
            adj[j, i] = 1
            deg[i] += 1
            deg[j] += 1
            accepted += 1
    return accepted


def warmup():
    adj = np.zeros((2, 2), dtype=np.uint8)
    deg = np.zeros(2, dtype=np.int64)
    idx = np.zeros(1, dtype=np.int64)
    mh_toggle(adj, deg, idx, idx + 1, np.zeros(1), 0.0, idx, np.zeros(1))
