import numpy as np
import pytest

from ehcr.errors import InstanceError, UsageError
from ehcr.experiments import (
    CSV_HEADER,
    FIG6_PROFILES,
    ChannelProfile,
    ChannelStatistics,
    SweepSpec,
    figure_spec,
    generate_channel,
    run_sweep,
    spec_from_dict,
    splitmix64,
    sweep_rows_to_csv,
)
from ehcr.model import ScenarioParams


def _params(**kwargs):
    base = dict(M=2, N=4, E0=2.0, alpha=0.9, p_p=1.0, P_int=0.1, sigma2=0.1)
    base.update(kwargs)
    return ScenarioParams(**base)


def test_splitmix_is_deterministic_and_spreads():
    assert splitmix64(7, 1, 2) == splitmix64(7, 1, 2)
    assert splitmix64(7, 1, 2) != splitmix64(7, 2, 1)
    assert 0 <= splitmix64(0) < 2**64


def test_channel_generation_deterministic():
    stats = ChannelStatistics()
    params = _params()
    a = generate_channel(stats, params, 42)
    b = generate_channel(stats, params, 42)
    assert np.array_equal(a.h_ss, b.h_ss)
    assert np.array_equal(a.h_ps, b.h_ps)
    assert np.array_equal(a.h_sp, b.h_sp)
    c = generate_channel(stats, params, 43)
    assert not np.array_equal(a.h_ss, c.h_ss)


def test_channel_prefix_shared_across_horizons():
    stats = ChannelStatistics()
    short = generate_channel(stats, _params(M=2, N=4), 7)
    long = generate_channel(stats, _params(M=2, N=9), 7)
    assert np.array_equal(short.h_ss, long.h_ss[:4])
    assert np.array_equal(short.h_ps, long.h_ps)


def test_channel_sample_means_match_statistics():
    stats = ChannelStatistics()
    params = _params(M=0, N=100_000)
    chan = generate_channel(stats, params, 3)
    # exponential(0.1): the mean estimator has sd 0.1/sqrt(1e5) ~ 3.2e-4
    assert abs(float(np.mean(chan.h_ss)) - 0.1) <= 0.003


def test_channel_weak_link_profile_mean():
    stats = ChannelStatistics(var_sp=0.01)
    params = _params(M=50_000, N=100_000)
    chan = generate_channel(stats, params, 11)
    assert abs(float(np.mean(chan.h_sp)) - 0.01) <= 3 * 0.01 / np.sqrt(50_000)


def test_stats_must_be_positive():
    with pytest.raises(InstanceError):
        ChannelStatistics(var_ss=0.0)


@pytest.mark.parametrize(
    "kwargs, error",
    [
        (dict(variable="bandwidth", grid=(1.0,)), UsageError),
        (dict(variable="P_int", grid=()), UsageError),
        (dict(variable="P_int", grid=(0.1, 0.01)), UsageError),
        (dict(variable="P_int", grid=(0.01, 0.1), trials=0), UsageError),
        (dict(variable="P_int", grid=(0.01, 0.1), epsilon=0.0), UsageError),
        (dict(variable="channel_profile", grid=(0.1,)), UsageError),
    ],
)
def test_sweep_spec_validation(kwargs, error):
    with pytest.raises(error):
        SweepSpec(params=_params(), **kwargs)


def test_run_sweep_rows_and_invariants():
    spec = SweepSpec(
        variable="P_int", grid=(0.01, 0.1, 1.0), params=_params(), trials=6, seed=5
    )
    rows = run_sweep(spec)
    assert len(rows) == 3
    for row in rows:
        assert row.mean_rate_opt >= row.mean_rate_greedy - 1e-9
        assert row.mean_eh_slots + row.mean_tx_slots == pytest.approx(
            float(spec.params.M), abs=0.0
        )
        assert row.trials == 6 and row.seed == 5
    # common random numbers make the optimal mean monotone up to the gap tol
    assert rows[1].mean_rate_opt >= rows[0].mean_rate_opt - 2e-4
    assert rows[2].mean_rate_opt >= rows[1].mean_rate_opt - 2e-4


def test_run_sweep_worker_pool_is_bitwise_identical():
    spec = SweepSpec(
        variable="p_p", grid=(0.5, 2.0), params=_params(), trials=4, seed=9
    )
    serial = sweep_rows_to_csv(run_sweep(spec, workers=1))
    parallel = sweep_rows_to_csv(run_sweep(spec, workers=2))
    assert serial == parallel


def test_alpha_sweep_monotone_with_common_draws():
    spec = SweepSpec(
        variable="alpha", grid=(0.1, 0.5, 0.9), params=_params(E0=0.0), trials=6, seed=2
    )
    rows = run_sweep(spec)
    for lo, hi in zip(rows, rows[1:]):
        assert hi.mean_rate_opt >= lo.mean_rate_opt - 2e-4


def test_horizon_sweep_keeps_active_offset():
    spec = SweepSpec(
        variable="N", grid=(4, 6), params=_params(M=2, N=4), trials=2, seed=1
    )
    rows = run_sweep(spec)
    assert rows[0].x_value == 4.0 and rows[1].x_value == 6.0
    # offset N - M = 2 is preserved: at N=6 there are M=4 active slots
    assert rows[1].mean_eh_slots + rows[1].mean_tx_slots == pytest.approx(4.0)


def test_csv_header_and_round_trip():
    spec = SweepSpec(variable="P_int", grid=(0.1,), params=_params(), trials=3, seed=4)
    rows = run_sweep(spec)
    text = sweep_rows_to_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert lines[0].startswith(
        "x_value,mean_rate_opt,mean_rate_greedy,mean_eh_slots,mean_tx_slots,"
        "mean_iters,trials,seed"
    )
    fields = lines[1].split(",")
    assert float(fields[0]) == rows[0].x_value
    assert float(fields[1]) == rows[0].mean_rate_opt  # exact textual round-trip
    assert int(fields[6]) == 3


def test_figure_specs_cover_all_ids():
    for fig in ("fig2", "fig3", "fig4", "fig5", "fig6"):
        spec = figure_spec(fig, trials=10, seed=1)
        assert spec.trials == 10
    assert figure_spec("fig6").grid == FIG6_PROFILES
    with pytest.raises(UsageError):
        figure_spec("fig7")


def test_spec_from_dict_variants():
    spec = spec_from_dict({"figure": "fig5", "trials": 12, "seed": 3})
    assert spec.variable == "p_p" and spec.trials == 12 and spec.seed == 3
    inline = spec_from_dict(
        {
            "variable": "alpha",
            "grid": [0.1, 0.9],
            "params": dict(M=1, N=2, E0=1.0, alpha=0.5, p_p=1.0, P_int=0.1, sigma2=0.1),
            "trials": 2,
        }
    )
    assert inline.variable == "alpha" and inline.trials == 2
    profile = spec_from_dict(
        {
            "variable": "channel_profile",
            "grid": [{"name": "flat", "var_ss": 0.1, "var_sp": 0.1, "var_ps": 0.1}],
            "params": dict(M=1, N=2, E0=1.0, alpha=0.5, p_p=1.0, P_int=0.1, sigma2=0.1),
            "trials": 1,
        }
    )
    assert isinstance(profile.grid[0], ChannelProfile)
    with pytest.raises(InstanceError):
        spec_from_dict({"variable": "alpha"})
    with pytest.raises(InstanceError):
        spec_from_dict([1, 2])
