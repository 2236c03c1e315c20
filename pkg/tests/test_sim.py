import math
from dataclasses import replace

import numpy as np
import pytest

from wlan_discovery.deployment import DEFAULT_CHANNELS, generate_ppp_waps
from wlan_discovery.errors import ConfigError
from wlan_discovery.power import expected_power
from wlan_discovery.schemes import SchemeConfig, SchemeState, select_channels
from wlan_discovery.sim import (RECORD_FIELDS, SimConfig, SweepReport, compare_analytical, replication_seed,
                                run_replication, run_sweep, steady, summarize)

SHORT = SimConfig(duration=600.0, oracle_mobility=True)


def test_record_count_and_timing():
    recs = run_replication(SHORT.with_scheme("wlan_aware"), 3)
    assert len(recs) == 60
    assert [r.time_s for r in recs[:3]] == [10.0, 20.0, 30.0]
    assert recs[-1].scan_index == 60
    assert RECORD_FIELDS[0] == "scan_index"


def test_conventional_always_scans_everything():
    recs = run_replication(SHORT.with_scheme("conventional"), 4)
    assert {r.n_channels for r in recs} == {20}
    assert {r.power_mw for r in recs} == {300.0}


def test_empty_world():
    cfg = replace(SHORT, densities={f: 0.0 for f in DEFAULT_CHANNELS}).with_scheme("wlan_aware")
    recs = run_replication(cfg, 0)
    assert all(r.discoveries == 0 and r.n_channels == 0 and r.offload_wap is None for r in recs)
    assert all(r.power_mw == cfg.b for r in recs)
    # nothing is ever discovered, so the estimate never becomes known
    assert all(math.isinf(r.position_error_m) for r in recs)


def test_channel_distances_grow_without_scans():
    empty = generate_ppp_waps(SHORT.region, {1: 0.0}, 0)
    st_ = SchemeState.initial(SHORT.with_scheme("wlan_aware").scheme)
    start = dict(st_.table.dist)
    for k in range(1, 4):
        assert select_channels(st_, empty, empty, (0.0, 0.0), 10.0, SHORT.wlan_model) == []
        assert all(st_.table.dist[f] == pytest.approx(start[f] + 10.0 * k) for f in DEFAULT_CHANNELS)


def _key(r):
    return tuple(-999.0 if isinstance(v, float) and math.isnan(v) else v for v in vars(r).values())


def test_replications_are_reproducible():
    cfg = SimConfig(duration=300.0).with_scheme("wlan_aware")
    a, b = run_replication(cfg, 17), run_replication(cfg, 17)
    assert [_key(r) for r in a] == [_key(r) for r in b]
    assert [_key(r) for r in run_replication(cfg, 18)] != [_key(r) for r in a]


@pytest.mark.parametrize("scheme", ["conventional", "3gpp_assisted", "gps_assisted", "wlan_aware", "wlan_aware_gps"])
def test_power_identity_per_record(scheme):
    cfg = SHORT.with_scheme(scheme)
    pp = cfg.power_params()
    for r in run_replication(cfg, 5):
        assert r.power_mw == pytest.approx(expected_power(r.n_channels, pp, cfg.scheme.uses_gps))
        assert 0 <= r.n_channels <= 20
        assert r.discoveries >= 0


def test_mean_power_matches_mean_channels():
    cfg = SHORT.with_scheme("wlan_aware")
    runs = [run_replication(cfg, s) for s in range(3)]
    row = summarize(cfg, 1e-4, runs)
    assert row.mean_power == pytest.approx(expected_power(row.mean_channels, cfg.power_params()))
    assert row.scans == 3 * (60 - cfg.warmup_scans)
    assert len(steady(runs[0], 5)) == 55


def test_schemes_share_worlds():
    # same seed, same deployment and walk: conventional and 3gpp hear the same strongest WAP
    conv = run_replication(SHORT.with_scheme("conventional"), 9)
    gpp = run_replication(SHORT.with_scheme("3gpp_assisted"), 9)
    assert [r.offload_wap for r in conv] == [r.offload_wap for r in gpp]
    assert [r.true_state for r in conv] == [r.true_state for r in gpp]


def test_replication_seeds_distinct():
    seeds = {replication_seed(1, li, r) for li in range(6) for r in range(1000)}
    assert len(seeds) == 6000


def test_sweep_shape_and_ordering():
    cfg = SimConfig(duration=900.0, oracle_mobility=True, replications=2)
    schemes = ["conventional", "3gpp_assisted", "gps_assisted", "wlan_aware", "wlan_aware_gps"]
    rep = run_sweep(cfg, [1e-5, 1e-4], schemes)
    assert len(rep) == 10
    hi = {s: rep.row(1e-4, s) for s in schemes}
    assert hi["conventional"].mean_channels == 20
    assert hi["wlan_aware"].mean_power < hi["3gpp_assisted"].mean_power <= hi["conventional"].mean_power
    assert rep.row(1e-5, "3gpp_assisted").mean_channels <= hi["3gpp_assisted"].mean_channels
    verdicts = compare_analytical(rep, 0.5)
    assert {(v.lam, v.scheme) for v in verdicts} == {(l, s) for l in (1e-5, 1e-4) for s in ("wlan_aware", "gps_assisted")}
    with pytest.raises(KeyError):
        rep.row(3e-4, "wlan_aware")


def test_empty_report():
    assert compare_analytical(SweepReport(), 0.1) == []


def test_sweep_rejects_zero_density():
    with pytest.raises(ConfigError):
        run_sweep(SHORT, [0.0], ["wlan_aware"])


@pytest.mark.parametrize("kw", [dict(duration=50.0), dict(replications=0), dict(speed=0.0), dict(serving_cell="x")])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_d_h_must_not_exceed_d_r():
    with pytest.raises(ConfigError, match="D_h"):
        SimConfig(scheme=SchemeConfig(s_high=-95.0))


def test_estimator_path_runs():
    cfg = SimConfig(duration=300.0).with_scheme("wlan_aware")
    recs = run_replication(cfg, 2)
    assert {r.estimated_state for r in recs} <= {"static", "mobile"}
    # first window has no predecessor, so the estimator falls back to mobile
    assert recs[0].estimated_state == "mobile"
    agree = np.mean([r.estimated_state == r.true_state for r in recs])
    assert agree > 0.8


def test_grid_serving_cell_subsets_channels():
    cfg = replace(SHORT, serving_cell="grid").with_scheme("3gpp_assisted")
    full = run_replication(SHORT.with_scheme("3gpp_assisted"), 6)
    part = run_replication(cfg, 6)
    assert all(p.n_channels <= f.n_channels for p, f in zip(part, full))
    assert np.mean([p.n_channels for p in part]) < np.mean([f.n_channels for f in full])


def test_gps_noise_reported_as_error():
    cfg = replace(SHORT, gps_error_sigma=5.0).with_scheme("gps_assisted")
    recs = run_replication(cfg, 1)
    assert {r.position_error_m for r in recs} == {5.0}
    assert all(math.isnan(r.position_error_m) for r in run_replication(SHORT.with_scheme("conventional"), 1))
