"""Small hand-built scenarios shared by the tests."""

import numpy as np

from cohems.appliance import ApplianceSpec, LoadProfile, Residence
from cohems.scenario import Scenario


def make_scenario(profiles, delays, arrivals, base=1.0, pmax=20.0, rates=None):
    """Scenario with one residence per row of ``arrivals`` (shape ``(M, N, L)``)."""
    arrivals = np.asarray(arrivals, dtype=np.int64)
    M, N, L = arrivals.shape
    res = [Residence(tuple(ApplianceSpec(LoadProfile(profiles[m][i]), delays[m][i]) for i in range(N)),
                     np.full(L, base), pmax) for m in range(M)]
    if rates is None:
        # the means reproduce the realisation exactly
        rates = np.diff(arrivals, axis=2, prepend=0).astype(float)
    return Scenario(res, arrivals, np.asarray(rates, dtype=float), 0)


def random_tiny(seed, M=2, L=8, unit=False):
    rng = np.random.default_rng(seed)
    profiles, delays, arr = [], [], np.zeros((M, 1, L), dtype=np.int64)
    for m in range(M):
        G = 1 if unit else int(rng.integers(1, 4))
        profiles.append([[float(rng.integers(1, 4))] * G])
        delays.append([int(rng.integers(0, 4))])
        inc = np.zeros(L, dtype=np.int64)
        inc[int(rng.integers(0, L - 2))] = 1
        arr[m, 0] = np.cumsum(inc)
    E = rng.integers(1, 7, L).astype(float)
    return make_scenario(profiles, delays, arr), E
