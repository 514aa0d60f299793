import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from entweb import breeding as br
from entweb.hilbert import fidelity, w_state
from entweb.resources import overhead_breeding


def test_initial_pair_examples():
    assert br.initial_pair(2).amplitudes == pytest.approx((0.5, 0.5, 0.5, 0.5))
    r3 = math.sqrt(3)
    assert br.initial_pair(4).amplitudes == pytest.approx((0.25, r3 / 4, r3 / 4, 0.75))
    assert sum(a * a for a in br.initial_pair(100).amplitudes) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        br.initial_pair(1)
    with pytest.raises(ValueError):
        br.EffectiveWPair(4, (1.0, 1.0, 0.0, 0.0))


def test_step_n4():
    branches = br.breed_step_exact(br.initial_pair(4))
    by = {b.record: b for b in branches}
    p_one = by[("Z2=1", "X1=+")].probability + by[("Z2=1", "X1=-")].probability
    assert p_one == pytest.approx(3 / 8)
    assert by[("Z2=1", "X1=+")].probability == pytest.approx(3 / 16)
    assert by[("Z2=0", "Z1=0")].probability == pytest.approx(9 / 16)
    assert by[("Z2=0", "Z1=1")].probability == pytest.approx(1 / 16)
    # corrected conversion branches are the even superposition of W,0 and 0,W
    for tag in "+-":
        regs = by[("Z2=1", f"X1={tag}")].registers
        assert regs == pytest.approx({"W0": 1 / math.sqrt(2), "0W": 1 / math.sqrt(2)})
    assert by[("Z2=0", "Z1=0")].registers == pytest.approx({"WW": 1.0})


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
def test_effective_matches_oracle(n):
    oracle = br.statevector_oracle(n)
    for b in br.breed_step_exact(br.initial_pair(n)):
        assert b.probability == pytest.approx(oracle.branch_probabilities[b.record], abs=1e-12)
    assert oracle.converted_fidelity == pytest.approx(1.0, abs=1e-12)
    assert oracle.recycled_fidelity == pytest.approx(1.0, abs=1e-12)
    conv, rec, lost = br.breed_step_distribution(n)
    assert oracle.probabilities[br.Outcome.CONVERTED] == pytest.approx(conv, abs=1e-12)
    assert oracle.probabilities[br.Outcome.RECYCLED] == pytest.approx(rec, abs=1e-12)
    assert oracle.probabilities[br.Outcome.LOST] == pytest.approx(lost, abs=1e-12)


def test_oracle_examples_and_range():
    assert br.statevector_oracle(4).probabilities[br.Outcome.CONVERTED] == pytest.approx(0.375, abs=1e-12)
    assert br.statevector_oracle(5).probabilities[br.Outcome.RECYCLED] == pytest.approx(16 / 25, abs=1e-12)
    assert br.statevector_oracle(2).probabilities[br.Outcome.CONVERTED] == pytest.approx(0.5, abs=1e-12)
    for bad in (1, 8):
        with pytest.raises(ValueError):
            br.statevector_oracle(bad)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_conversion_result_is_w(n):
    pair = br.initial_pair(n)
    for b in br.breed_step_exact(pair):
        if b.outcome is br.Outcome.CONVERTED:
            state = br.conversion_result_state(pair, b)
            assert state.layout.n_sites == 2 * (n - 1)
            assert fidelity(w_state(2 * (n - 1)), state) == pytest.approx(1.0, abs=1e-12)
        else:
            with pytest.raises(ValueError):
                br.conversion_result_state(pair, b)


def test_distribution_modes():
    assert br.breed_step_distribution(4, "exact") == pytest.approx((0.375, 0.5625, 0.0625))
    assert br.breed_step_distribution(4, "paper") == pytest.approx((0.1875, 0.5625, 0.25))
    big = 10 ** 6
    for mode in ("exact", "paper"):
        assert br.breed_step_distribution(big, mode)[0] < 3 / big


@given(st.integers(2, 10 ** 6), st.sampled_from(["exact", "paper"]))
def test_fractions_sum_to_one(n, mode):
    conv, rec, lost = br.breed_step_fractions(n, mode)
    assert conv + rec + lost == 1
    assert min(conv, rec, lost) >= 0
    assert rec == Fraction((n - 1) ** 2, n * n)
    if mode == "paper":
        assert lost == Fraction(1, n)


def test_schedule_recurrence():
    sizes = br.schedule_sizes(21)
    assert all(b == 2 * (a - 1) for a, b in zip(sizes, sizes[1:]))
    assert all(2 * (n - 1) > n for n in range(4, 100))


class TestSequence:
    def test_target_four_is_seed_cost(self):
        s = br.breed_sequence_mc(4, "paper", br.NO_RECYCLING, 0, 4000)
        assert abs(s.mean_qubits - 8) < 3 * s.stderr_qubits
        assert s.mean_clicks == 4

    @pytest.mark.parametrize("target,mode", [(6, "paper"), (10, "paper"), (6, "exact")])
    def test_mean_matches_overhead(self, target, mode):
        s = br.breed_sequence_mc(target, mode, br.NO_RECYCLING, 1, 4000)
        assert abs(s.mean_qubits - overhead_breeding(target, 1.0, mode)) < 3 * s.stderr_qubits

    def test_lossy_mean_matches_overhead(self):
        s = br.breed_sequence_mc(6, "paper", br.NO_RECYCLING, 2, 4000, eta=0.8)
        assert abs(s.mean_qubits - overhead_breeding(6, 0.8, "paper")) < 3 * s.stderr_qubits

    def test_recycling_helps(self):
        plain = br.breed_sequence_mc(6, "paper", br.NO_RECYCLING, 3, 10000)
        greedy = br.breed_sequence_mc(6, "paper", br.GREEDY_RECYCLING, 3, 10000)
        gap = plain.mean_qubits - greedy.mean_qubits
        assert gap > 3 * math.hypot(plain.stderr_qubits, greedy.stderr_qubits)
        assert greedy.mean_recycles > 0

    def test_click_accounting(self):
        rng_ledger = br._Breeder(10, br.ProbabilityMode.PAPER, br.GREEDY_RECYCLING, 1.0,
                                 __import__("entweb.rng", fromlist=["trial_rng"]).trial_rng(0, 0)).run()
        assert rng_ledger.clicks == 4 * rng_ledger.seeds + 2 * rng_ledger.conversions_attempted
        assert rng_ledger.seed_attempts >= rng_ledger.seeds

    def test_reproducible(self):
        a = br.breed_sequence_mc(10, "exact", br.GREEDY_RECYCLING, 99, 300)
        b = br.breed_sequence_mc(10, "exact", br.GREEDY_RECYCLING, 99, 300)
        assert a == b

    def test_validation(self):
        with pytest.raises(ValueError, match="valid sizes"):
            br.breed_sequence_mc(8)
        with pytest.raises(ValueError):
            br.breed_sequence_mc(6, policy="hoard")
        with pytest.raises(ValueError):
            br.breed_sequence_mc(6, trials=0)
