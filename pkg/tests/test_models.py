import math

import numpy as np
import pytest

from alohagame.models import (
    NodeSpec,
    NoCsi,
    PerfectCsi,
    Power,
    QuantizedCsi,
    Scenario,
    Sinr,
    SlotOutcome,
    decide_capture,
    quantized_level_probs,
    sample_gains,
    threshold_to_prob,
)
from alohagame.simulator import _capture_chunk


def rng_pair(seed=123):
    return (
        np.random.Generator(np.random.Philox(seed)),
        np.random.Generator(np.random.Philox(seed)),
    )


class TestTypes:
    def test_capture_model_validation(self):
        with pytest.raises(ValueError):
            Sinr(b=0.0)
        with pytest.raises(ValueError):
            Sinr(b=1.0, noise_ratio=-0.1)
        with pytest.raises(ValueError):
            Power(delta=-1.0)
        assert math.isinf(Power(math.inf).delta)

    def test_quantized_validation(self):
        with pytest.raises(ValueError):
            QuantizedCsi((1.0, 0.5), (0, 0.5, 1))  # not increasing
        with pytest.raises(ValueError):
            QuantizedCsi((0.5,), (0.0, 0.5, 1.0))  # wrong length
        with pytest.raises(ValueError):
            QuantizedCsi((0.5, 1.0), (0.0, 0.5, 1.5))  # prob out of range

    def test_nodespec_threshold_derivation(self):
        node = NodeSpec(demand=0.1, csi=PerfectCsi(), tx_prob=0.52)
        assert abs(node.tx_prob - math.exp(-node.threshold)) < 1e-12

    def test_nodespec_threshold_consistency_enforced(self):
        with pytest.raises(ValueError):
            NodeSpec(demand=0.1, csi=PerfectCsi(), tx_prob=0.5, threshold=1.0)
        # consistent pair is accepted
        NodeSpec(demand=0.1, csi=PerfectCsi(), tx_prob=0.5, threshold=-math.log(0.5))

    def test_nodespec_threshold_only_for_perfect_csi(self):
        with pytest.raises(ValueError):
            NodeSpec(demand=0.1, csi=NoCsi(), tx_prob=0.5, threshold=0.7)

    def test_nodespec_range_checks(self):
        with pytest.raises(ValueError):
            NodeSpec(demand=1.2)
        with pytest.raises(ValueError):
            NodeSpec(demand=0.5, tx_prob=-0.1)

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            Scenario((), Sinr(5.0))
        with pytest.raises(ValueError):
            Scenario((NodeSpec(0.1),), Sinr(5.0), slots=0)
        with pytest.raises(ValueError):
            Scenario((NodeSpec(0.1),), Sinr(5.0), seed=-1)

    def test_slot_outcome_success_requires_transmission(self):
        with pytest.raises(ValueError):
            SlotOutcome((False,), (1.0,), (True,))
        SlotOutcome((True, False), (1.0, 0.5), (True, False))


class TestSampleGains:
    def test_unit_mean(self):
        rng = np.random.Generator(np.random.Philox(1))
        draws = sample_gains(1_000_000, rng)
        assert abs(draws.mean() - 1.0) < 0.01

    def test_deterministic_given_state(self):
        a, b = rng_pair()
        assert np.array_equal(sample_gains(1000, a), sample_gains(1000, b))

    def test_exponential_tail(self):
        # survival oracle: P(X > 1) = exp(-1)
        rng = np.random.Generator(np.random.Philox(2))
        draws = sample_gains(1_000_000, rng)
        assert abs((draws > 1.0).mean() - math.exp(-1.0)) < 0.005

    def test_rejects_nonpositive_n(self):
        rng = np.random.Generator(np.random.Philox(3))
        with pytest.raises(ValueError):
            sample_gains(0, rng)


class TestDecideCapture:
    def test_sinr_single_transmitter(self):
        got = decide_capture(Sinr(5.0, 0.1), [True], [1.0])
        assert got.tolist() == [True]  # SINR = 10 > 5

    def test_power_guard_zone(self):
        got = decide_capture(Power(0.5), [True, True], [1.0, 0.6])
        assert got.tolist() == [True, False]  # 1.0 > 1.5*0.6 = 0.9, 0.6 < 1.5

    def test_sinr_below_one_multi_capture(self):
        got = decide_capture(Sinr(0.4, 0.0), [True, True], [1.0, 1.0])
        assert got.tolist() == [True, True]  # SINR = 1 > 0.4 for both

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            decide_capture(Sinr(1.0), [True], [1.0, 2.0])

    def test_collision_model_sole_transmitter(self):
        rng = np.random.Generator(np.random.Philox(4))
        for _ in range(200):
            n = int(rng.integers(1, 6))
            tx = rng.random(n) < 0.5
            gains = rng.standard_exponential(n)
            got = decide_capture(Power(math.inf), tx, gains)
            expect = tx & (tx.sum() == 1)
            assert np.array_equal(got, expect)

    def test_huge_b_matches_collision(self):
        rng = np.random.Generator(np.random.Philox(5))
        for _ in range(200):
            n = int(rng.integers(1, 6))
            tx = rng.random(n) < 0.5
            gains = rng.standard_exponential(n)
            got = decide_capture(Sinr(1e9, 0.0), tx, gains)
            expect = decide_capture(Power(math.inf), tx, gains)
            assert np.array_equal(got, expect)

    def test_at_most_one_success_when_b_at_least_one(self):
        rng = np.random.Generator(np.random.Philox(6))
        for b in (1.0, 2.5, 10.0):
            for _ in range(200):
                n = int(rng.integers(1, 7))
                tx = rng.random(n) < 0.6
                gains = rng.standard_exponential(n)
                assert decide_capture(Sinr(b, 0.01), tx, gains).sum() <= 1

    def test_perfect_power_capture_strongest_wins(self):
        rng = np.random.Generator(np.random.Philox(7))
        for _ in range(200):
            n = int(rng.integers(1, 7))
            tx = rng.random(n) < 0.7
            gains = rng.standard_exponential(n)
            got = decide_capture(Power(0.0), tx, gains)
            if tx.any():
                tg = np.where(tx, gains, 0.0)
                assert got[np.argmax(tg)]
                assert got.sum() == 1

    def test_power_ties_fail(self):
        got = decide_capture(Power(0.0), [True, True], [0.8, 0.8])
        assert got.tolist() == [False, False]

    def test_lone_transmitter_always_captured_under_power(self):
        got = decide_capture(Power(math.inf), [False, True, False], [2.0, 0.01, 1.0])
        assert got.tolist() == [False, True, False]

    def test_vectorized_chunk_matches_scalar(self):
        rng = np.random.Generator(np.random.Philox(8))
        tx = rng.random((500, 4)) < 0.5
        gains = rng.standard_exponential((500, 4))
        for model in (Sinr(5.0, 0.05), Sinr(0.4, 0.0), Power(0.0), Power(1.2), Power(math.inf)):
            fast = _capture_chunk(model, tx, gains)
            slow = np.array(
                [decide_capture(model, tx[k], gains[k]) for k in range(tx.shape[0])]
            )
            assert np.array_equal(fast, slow), model


class TestThresholdToProb:
    def test_top_level_only(self):
        assert threshold_to_prob((0, 0, 1), (1 / 3, 1 / 3, 1 / 3)) == pytest.approx(1 / 3)

    def test_partial_level(self):
        got = threshold_to_prob((0, 0.5, 1), (0.5, 0.25, 0.25))
        assert got == pytest.approx(0.5 * 0.25 + 0.25)

    def test_always_transmit(self):
        assert threshold_to_prob((1, 1, 1), (0.2, 0.3, 0.5)) == pytest.approx(1.0)

    def test_never_transmit(self):
        assert threshold_to_prob((0, 0, 0), (0.2, 0.3, 0.5)) == 0.0

    def test_rejects_nonthreshold_form(self):
        with pytest.raises(ValueError):
            threshold_to_prob((0.5, 0.0, 1.0), (1 / 3, 1 / 3, 1 / 3))
        with pytest.raises(ValueError):
            threshold_to_prob((0, 0.3, 0.7), (1 / 3, 1 / 3, 1 / 3))

    def test_rejects_bad_level_probs(self):
        with pytest.raises(ValueError):
            threshold_to_prob((0, 1), (0.5, 0.4))  # does not sum to 1
        with pytest.raises(ValueError):
            threshold_to_prob((0, 1), (1.0, 0.0))  # zero occurrence

    def test_accepts_quantized_csi(self):
        csi = QuantizedCsi((0.5, 1.5), (0.0, 0.5, 1.0))
        probs = quantized_level_probs(csi.cutpoints)
        assert probs.sum() == pytest.approx(1.0)
        expect = 0.5 * probs[1] + probs[2]
        assert threshold_to_prob(csi, probs) == pytest.approx(expect)
