import math

import pytest

import gfla


def test_formulas():
    assert gfla.mu(0.99) == 99.0
    assert gfla.omega(12, 0, 4, 99.0) == 8.0
    assert gfla.omega(4, 1, 4, 99.0, 0.1) == pytest.approx(9.9)
    assert gfla.correlation_coefficient(10.0, 0.01) == pytest.approx(0.90375, abs=1e-4)
    assert gfla.packet_loss_prob(0.001, 800) == pytest.approx(1 - 0.999**800)
    assert gfla.bit_error_prob(1.0, 1) == pytest.approx(0.5 * math.erfc(1.0))
    assert [gfla.cw_min(b) for b in (1, 2, 3, 4)] == [64, 32, 16, 8]
    assert gfla.packets_per_tti(4, 0.009) == 4
    assert gfla.update_buffer(24, 5, 1) == (25, 3)


def test_weights_and_overhead():
    w = gfla.weight_counts()
    assert w["total"] == 17793
    assert gfla.weight_counts(convention="weights_only")["actor_head"] == 10240
    assert gfla.overhead("dacc") == (1600.0, 1600.0)
    assert gfla.overhead("il") == (0.0, 0.0)
    assert gfla.overhead("cldi", weight_count=2562)[1] == gfla.REPORTED_CLDI_DOWNLINK_BPS
    with pytest.raises(ValueError):
        gfla.weight_counts(convention="other")


def test_half_precision():
    assert gfla.to_half(1.0) == 0x3C00
    assert gfla.from_half(gfla.to_half(0.1)) == pytest.approx(0.1, rel=1e-3)


def test_config_errors():
    assert "users = 7" in gfla.normalize_config("users = 7")
    with pytest.raises(gfla.ConfigError, match="line 2"):
        gfla.normalize_config("users = 7\ngamma = 1.5\n")
    with pytest.raises(ValueError):
        gfla.normalize_config("unknown_key = 1")


def test_small_campaign(tmp_path):
    text = ("users = 6\npreambles = 4\nttis = 20\nrealizations = 2\narch = baseline,cldi\n"
            "hidden = 8\nepochs = 1\nminibatches = 2\nupdate_period = 10\nbroadcast_period = 10\n")
    out = gfla.run(text, str(tmp_path))
    assert [s["arch"] for s in out["series"]] == ["baseline", "cldi"]
    for s in out["series"]:
        assert s["realizations"] == 2
        assert len(s["holding_mean"]) == 20
        assert s["conservation_violations"] == 0
    assert (tmp_path / "metrics.csv").read_text() == out["metrics_csv"]
    assert gfla.run(text)["metrics_csv"] == out["metrics_csv"]


def test_verify_suite_runs():
    checks = gfla.verify()
    assert len(checks) > 50
    names = {name for name, _, _ in checks}
    assert "zero-gradient fixed point" in names
