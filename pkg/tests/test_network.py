import itertools
import math

import numpy as np
import pytest

from entweb.seeding import (PERMISSIVE, STRICT_DISTINCT, CannotCorrectError, ClickEvent,
                            ClickRecord, accept_pattern, detector_matrix, herald_state,
                            pattern_key, pattern_probabilities, phase_correction,
                            target_state)
from entweb.seeding.network import heralded_amplitudes, level_for, parse_pattern_key
from entweb.seeding.trajectory import apply_correction
from entweb.hilbert import fidelity, permanent

NET4 = detector_matrix(2)


def rec(r1, r2):
    # detectors written 1-based as in the worked examples
    return ClickRecord.from_detectors([d - 1 for d in r1], [d - 1 for d in r2])


class TestDetectorMatrix:
    def test_base_case(self):
        assert detector_matrix(0).matrix.tolist() == [[1.0]]

    def test_level_two_second_row(self):
        np.testing.assert_allclose(NET4.matrix[1], [0.5, -0.5, 0.5, -0.5])

    @pytest.mark.parametrize("level", range(6))
    def test_orthonormal_and_entries(self, level):
        m = detector_matrix(level).matrix
        n = 2 ** level
        np.testing.assert_allclose(m @ m.T, np.eye(n), atol=1e-12)
        assert np.allclose(np.abs(m), 1 / math.sqrt(n))

    def test_level_bounds(self):
        with pytest.raises(ValueError):
            detector_matrix(6)
        with pytest.raises(ValueError):
            level_for(6)


class TestClickRecord:
    def test_times_must_increase(self):
        r = ClickRecord()
        r.add(ClickEvent(1, 0, 1.0))
        r.add(ClickEvent(2, 0, 0.5))
        with pytest.raises(ValueError):
            r.add(ClickEvent(2, 1, 0.5))

    def test_pattern_key_roundtrip(self):
        r = rec((3, 1, 2), (4,))
        assert pattern_key(r) == "0,1,2|3"
        assert parse_pattern_key("0,1,2|3") == ((0, 1, 2), (3,))
        assert parse_pattern_key("|0,0,1,1") == ((), (0, 0, 1, 1))


class TestAcceptance:
    def test_worked_example_accepted_in_both(self):
        for mode in (PERMISSIVE, STRICT_DISTINCT):
            assert accept_pattern(rec((1, 2, 3), (4,)), 4, 1, mode)
            assert accept_pattern(rec((4,), (1, 2, 3)), 4, 1, mode)

    def test_repeat_only_permissive(self):
        r = rec((1, 1, 2), (2,))
        assert accept_pattern(r, 4, 1, PERMISSIVE)
        assert not accept_pattern(r, 4, 1, STRICT_DISTINCT)

    def test_count_mismatch(self):
        assert not accept_pattern(rec((1, 2), (3, 4)), 4, 1)
        assert accept_pattern(rec((1, 2), (3, 4)), 4, 2)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            accept_pattern(rec((1,), (2,)), 2, 1, "lenient")


class TestPhaseCorrection:
    def test_round_one_sign_pattern(self):
        # after clicks 1,2,3 the node left unexcited carries sign (+,-,-,+)
        state = herald_state(4, (0, 1, 2), ())
        assert state is None  # three clicks plus zero cannot account for all four nodes
        a = NET4.signs
        signs = [int(np.sign(permanent(a[np.ix_([0, 1, 2], [c for c in range(4) if c != j])])))
                 for j in range(4)]
        assert signs == [1, -1, -1, 1]

    def test_worked_example_needs_no_correction(self):
        # the round-two click on detector 4 multiplies by row (+,-,-,+)
        corr = phase_correction(rec((1, 2, 3), (4,)), NET4, target_ones=1)
        assert corr.mask == (1, 1, 1, 1) and not corr.flip_all
        state = herald_state(4, (0, 1, 2), (3,))
        assert fidelity(target_state(4, 1), state) == pytest.approx(1.0, abs=1e-12)

    def test_all_same_detector(self):
        corr = phase_correction(rec((1, 1, 1), (1,)), NET4, target_ones=1)
        assert corr.mask == (1, 1, 1, 1)

    def test_single_first_then_repeat(self):
        corr = phase_correction(rec((4,), (1, 1, 2)), NET4, target_ones=1)
        assert all(abs(s) == 1 for s in corr.mask) and corr.flip_all
        state = herald_state(4, (3,), (0, 0, 1))
        fid = fidelity(target_state(4, 1), apply_correction(state, corr))
        assert fid == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("r1", list(itertools.combinations_with_replacement(range(4), 3)))
    def test_every_three_one_pattern_correctable(self, r1):
        for i in range(4):
            for first, second in ((r1, (i,)), ((i,), r1)):
                state = herald_state(4, first, second)
                corr = phase_correction(ClickRecord.from_detectors(first, second), NET4, 1)
                fid = fidelity(target_state(4, 1), apply_correction(state, corr))
                assert fid == pytest.approx(1.0, abs=1e-12)

    def test_mask_canonical_first_positive(self):
        for r1 in itertools.combinations_with_replacement(range(4), 3):
            for i in range(4):
                assert phase_correction(ClickRecord.from_detectors(r1, (i,)), NET4, 1).mask[0] == 1

    def test_wrong_click_total(self):
        with pytest.raises(CannotCorrectError):
            heralded_amplitudes(rec((1,), (2,)), NET4)

    def test_dicke_pattern_diagnostics(self):
        # 2+2 patterns with unequal branch weights cannot be fixed by phases
        with pytest.raises(CannotCorrectError):
            phase_correction(ClickRecord.from_detectors((0, 0), (0, 1)), NET4, 2)


def _correctable(r1, r2):
    try:
        phase_correction(ClickRecord.from_detectors(r1, r2), NET4, 2)
        return True
    except CannotCorrectError:
        return False


def test_dicke_correctable_patterns_reach_fidelity_one():
    good = 0
    for r1 in itertools.combinations_with_replacement(range(4), 2):
        for r2 in itertools.combinations_with_replacement(range(4), 2):
            if not _correctable(r1, r2):
                continue
            good += 1
            state = herald_state(4, r1, r2)
            corr = phase_correction(ClickRecord.from_detectors(r1, r2), NET4, 2)
            assert fidelity(target_state(4, 2), apply_correction(state, corr)) == pytest.approx(1.0, abs=1e-12)
    assert good == 16


class TestPatternOracle:
    def test_three_click_values(self):
        probs = pattern_probabilities(4, 3)
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
        for pattern, p in probs.items():
            kinds = len(set(pattern))
            expected = {3: 1 / 16, 2: 1 / 32, 1: 3 / 32}[kinds]
            assert p == pytest.approx(expected, abs=1e-12)

    def test_strict_rate_is_one_eighth(self):
        # P(3 excitations) * P(distinct triple) in each round order
        probs = pattern_probabilities(4, 3)
        distinct = sum(p for pat, p in probs.items() if len(set(pat)) == 3)
        assert 2 * (4 / 16) * distinct == pytest.approx(1 / 8)

    def test_single_photon_uniform(self):
        probs = pattern_probabilities(4, 1)
        assert all(v == pytest.approx(0.25) for v in probs.values())
