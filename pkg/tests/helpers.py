"""
Shared data sets for the tests; builders are cached per argument tuple.
"""

from functools import lru_cache

import numpy as np

from mkdv_transform.core import ModelParams
from mkdv_transform.data import BoundaryTraces, InitialProfile
from mkdv_transform.oracle import exact_traveling_wave
from mkdv_transform.spectral import SpectralData

PARAMS = ModelParams(lam=-1, L=1.0, T=0.5)


@lru_cache(maxsize=None)
def wave_dataset(kappa=1.0, N_x=64, N_t=128):
    return exact_traveling_wave(kappa, 0.5, PARAMS, N_x, N_t)


@lru_cache(maxsize=None)
def wave_spectral(kappa=1.0, N_x=64, N_t=128):
    data = wave_dataset(kappa, N_x, N_t)
    return SpectralData(data.profile, data.traces, data.params, field=data.field)


@lru_cache(maxsize=None)
def zero_spectral(N_x=16, N_t=16):
    profile = InitialProfile(np.zeros(N_x + 1), PARAMS.L)
    traces = BoundaryTraces.zeros(N_t, PARAMS.T)
    return SpectralData(profile, traces, PARAMS)


def constant_profile(value, N_x=16, L=1.0):
    return InitialProfile(np.full(N_x + 1, float(value)), L)


def constant_traces(value, N_t=16, T=0.5):
    channel = np.zeros((3, N_t + 1))
    channel[0] = value
    return BoundaryTraces(channel, channel.copy(), T)
