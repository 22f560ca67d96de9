import numpy as np
import pytest

from rismec.allocation import RaDecision, ra_overhead
from rismec.channel import RisConfiguration
from rismec.protocol import (InfeasibleSlotError, PacketOutcomes, SlotHistory,
                             apply_loss_effects, compute_timing,
                             sample_outcomes, update_es_view)
from rismec.scenario import load_config


class TestComputeTiming:
    def test_long_tti_preset_matches_reported_overheads(self):
        cfg = load_config("preset = long_tti")
        t = compute_timing(cfg)
        assert t.tau_ce == pytest.approx(46.43e-3, abs=0.1e-3)
        assert t.tau_ini + t.tau_set == pytest.approx(3.6e-3, abs=0.1e-3)

    def test_default_tti_initialization(self):
        t = compute_timing(load_config(""))
        assert t.tau_ini == pytest.approx(3 / 14 * 1e-3, rel=1e-12)
        assert t.tau_set == pytest.approx(2 / 14 * 1e-3, rel=1e-12)

    def test_identity_exact(self):
        for doc in ("", "preset = long_tti", "ris_switch_s = 1e-4"):
            cfg = load_config(doc)
            t = compute_timing(cfg)
            assert abs(t.tau_ini + t.tau_ce + t.tau_ra + t.tau_set
                       + t.tau_pay - cfg.slot) < 1e-12

    def test_infeasible_slot_names_both_values(self):
        cfg = load_config("preset = long_tti\nslot_s = 0.03")
        with pytest.raises(InfeasibleSlotError, match="0.03"):
            compute_timing(cfg)

    def test_switch_time_enters_every_phase(self):
        base = compute_timing(load_config(""))
        switched = compute_timing(load_config("ris_switch_s = 1e-4"))
        assert switched.tau_ini - base.tau_ini == pytest.approx(1e-4)
        assert switched.tau_set - base.tau_set == pytest.approx(2e-4)
        assert switched.tau_ce - base.tau_ce == pytest.approx(65e-4)


class TestSampleOutcomes:
    def test_zero_probability_no_losses(self, rng):
        cfg = load_config("")
        for _ in range(50):
            o = sample_outcomes(rng, cfg)
            assert not o.ini_r_lost and not o.set_r_lost
            assert not o.ini_u_lost.any() and not o.set_u_lost.any()

    def test_certain_loss(self, rng):
        cfg = load_config("loss_prob_set_r = 1.0")
        assert all(sample_outcomes(rng, cfg).set_r_lost for _ in range(20))

    def test_binomial_mean(self, rng):
        # p=0.5 per UE, K=4 -> mean lost count 2 within 3 sigma
        cfg = load_config("loss_prob_ini_u = 0.5")
        n = 10_000
        count = sum(sample_outcomes(rng, cfg).ini_u_lost.sum()
                    for _ in range(n))
        mean = count / n
        sigma = np.sqrt(4 * 0.25 / n)
        assert abs(mean - 2.0) < 3 * sigma


def _decision(cfg, power, rate):
    n_ra, tau_ra = ra_overhead(cfg)
    ris = RisConfiguration.all_on(cfg.num_elements, cfg.phase_bits)
    return RaDecision(3, ris, np.asarray(power, float), np.asarray(rate, float),
                      np.zeros(cfg.num_ues), n_ra, tau_ra, -1.0)


class TestApplyLossEffects:
    CFG = load_config("")

    def _history(self):
        ctl = RisConfiguration.all_on(self.CFG.num_elements, self.CFG.phase_bits)
        return SlotHistory(np.full(4, 0.01), np.full(4, 2e5),
                           RisConfiguration.all_off(self.CFG.num_elements,
                                                    self.CFG.phase_bits))

    def test_no_losses_identity(self):
        dec = _decision(self.CFG, [0.02] * 4, [3e5] * 4)
        out = apply_loss_effects(PacketOutcomes.none(4), dec, self._history(),
                                 np.full(4, 7.0), csi_valid=True)
        assert np.array_equal(out.power, dec.power)
        assert np.array_equal(out.rate, dec.rate)
        assert out.ris_config is dec.ris_config
        assert np.array_equal(out.es_queue_view, np.full(4, 7.0))

    def test_sounding_loss_zeroes_rates_for_everyone(self):
        dec = _decision(self.CFG, [0.0] * 4, [0.0] * 4)
        o = PacketOutcomes(np.zeros(4, bool), True, np.zeros(4, bool), False)
        out = apply_loss_effects(o, dec, self._history(), np.zeros(4),
                                 csi_valid=False)
        assert np.all(out.rate == 0)
        # UEs were never told anything failed: previous power still burns
        assert np.array_equal(out.power, self._history().power)
        # the surface never left the control configuration
        assert out.ris_config is dec.ris_config

    def test_parameter_loss_replays_previous_slot(self):
        dec = _decision(self.CFG, [0.02] * 4, [3e5] * 4)
        lost = np.array([True, False, False, True])
        o = PacketOutcomes(np.zeros(4, bool), False, lost, False)
        h = self._history()
        out = apply_loss_effects(o, dec, h, np.zeros(4), csi_valid=True)
        assert np.array_equal(out.power, np.where(lost, h.power, dec.power))
        assert np.array_equal(out.rate, np.where(lost, h.rate, dec.rate))

    def test_parameter_loss_first_slot_means_silence(self):
        cfg = self.CFG
        dec = _decision(cfg, [0.02] * 4, [3e5] * 4)
        h = SlotHistory.initial(4, RisConfiguration.all_on(cfg.num_elements,
                                                           cfg.phase_bits))
        o = PacketOutcomes(np.zeros(4, bool), False, np.ones(4, bool), False)
        out = apply_loss_effects(o, dec, h, np.zeros(4), csi_valid=True)
        assert np.all(out.power == 0) and np.all(out.rate == 0)

    def test_configuration_loss_keeps_stale_surface(self):
        dec = _decision(self.CFG, [0.02] * 4, [3e5] * 4)
        h = self._history()
        o = PacketOutcomes(np.zeros(4, bool), False, np.zeros(4, bool), True)
        out = apply_loss_effects(o, dec, h, np.zeros(4), csi_valid=True)
        assert out.ris_config is h.ris_config
        assert np.array_equal(out.power, dec.power)  # commands still fresh

    def test_order_sounding_first_then_per_ue(self):
        # a UE that missed its command replays history even when the global
        # sounding failure zeroed everyone else
        dec = _decision(self.CFG, [0.0] * 4, [0.0] * 4)
        h = self._history()
        lost = np.array([True, False, False, False])
        o = PacketOutcomes(np.zeros(4, bool), True, lost, False)
        out = apply_loss_effects(o, dec, h, np.zeros(4), csi_valid=False)
        assert out.rate[0] == h.rate[0]
        assert np.all(out.rate[1:] == 0)


class TestEsView:
    def test_received_reports_reveal_truth(self):
        view = update_es_view(np.zeros(4, bool), np.full(4, 9e3),
                              np.full(4, 5e3), np.full(4, 1e3))
        assert np.allclose(view, 9e3)

    def test_lost_report_rolls_forward_without_arrivals(self):
        lost = np.array([True, False, False, False])
        view = update_es_view(lost, np.full(4, 9e3), np.full(4, 5e3),
                              np.full(4, 1e3))
        assert view[0] == pytest.approx(4e3)   # 5e3 - 1e3, arrivals missing
        assert np.allclose(view[1:], 9e3)

    def test_never_negative(self):
        lost = np.ones(4, bool)
        view = update_es_view(lost, np.full(4, 9e3), np.full(4, 1e3),
                              np.full(4, 5e3))
        assert np.all(view == 0)

    def test_one_success_resynchronizes(self):
        # a received report restores the exact queue regardless of history
        view = update_es_view(np.zeros(4, bool), np.array([1.0, 2.0, 3.0, 4.0]),
                              np.full(4, 1e9), np.zeros(4))
        assert np.array_equal(view, [1.0, 2.0, 3.0, 4.0])
