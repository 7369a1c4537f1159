import numpy as np
import pytest

from ehcr.model import ChannelRealization, ScenarioParams, Schedule


def random_instance(rng, M=None, N=None, E0=None, alpha=None, p_p=1.0,
                    P_int=None, sigma2=0.1, mean_gain=0.1):
    """Seeded random instance in the reference operating regime."""
    if M is None:
        M = int(rng.integers(0, 7))
    if N is None:
        N = int(M + rng.integers(1 if M == 0 else 0, 5))
    if E0 is None:
        E0 = float(rng.choice([0.0, 0.5, 2.0]))
    if alpha is None:
        alpha = float(rng.choice([0.3, 0.9]))
    if P_int is None:
        P_int = float(rng.choice([0.01, 0.1, 1.0]))
    params = ScenarioParams(M=M, N=N, E0=E0, alpha=alpha, p_p=p_p,
                            P_int=P_int, sigma2=sigma2)
    chan = ChannelRealization(
        h_ss=rng.exponential(mean_gain, N),
        h_ps=rng.exponential(mean_gain, M),
        h_sp=rng.exponential(mean_gain, M),
    )
    return params, chan


def random_schedule(rng, M):
    return Schedule(I_H=rng.integers(0, 2, size=M))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
