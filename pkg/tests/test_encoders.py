import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpspike.encoders import (
    MISCLASSIFIED,
    ClassTargets,
    GrfParams,
    XorCoding,
    decode_output_class,
    encode_features,
    encode_iris_sample,
    encode_xor,
    grf_centers_widths,
    grf_responses,
    grf_spike_times,
    round_to_grid,
    xor_patterns,
)
from lpspike.srm import SpikeTrain


class TestXor:
    @pytest.mark.parametrize(
        "bits,times,target",
        [
            ((0, 0), (1.0, 1.0, 1.0), 17.0),
            ((0, 1), (1.0, 1.0, 7.0), 10.0),
            ((1, 0), (1.0, 7.0, 1.0), 10.0),
            ((1, 1), (1.0, 7.0, 7.0), 17.0),
        ],
    )
    def test_hidden_layer_rows(self, bits, times, target):
        p = encode_xor(*bits)
        assert p.input_times == times
        assert p.target_time == target

    def test_binary_coding(self):
        assert encode_xor(1, 1, "binary").target_time is None
        assert encode_xor(0, 0, XorCoding.BINARY).target_time is None
        assert encode_xor(1, 0, "binary").target_time == 10.0

    def test_bijection(self):
        rows = xor_patterns()
        assert len({p.input_times for p in rows}) == 4
        assert [p.bits for p in rows] == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_invalid(self):
        with pytest.raises(ValueError):
            encode_xor(2, 0)
        with pytest.raises(ValueError):
            XorCoding.parse("ternary")

    def test_trains(self):
        trains = encode_xor(0, 1).input_trains()
        assert trains == (SpikeTrain((1.0,)), SpikeTrain((1.0,)), SpikeTrain((7.0,)))


class TestGrf:
    def test_first_and_last_centre(self):
        cw = grf_centers_widths(GrfParams())
        assert cw[0][0] == pytest.approx(-25 / 6)
        assert cw[-1][0] == pytest.approx(325 / 6)
        assert all(s == pytest.approx(50 / 9) for _, s in cw)
        assert len(cw) == 8

    def test_one_width_away(self):
        p = GrfParams()
        c, s = grf_centers_widths(p)[3]
        phi = grf_responses(c + s, p)[3]
        assert phi == pytest.approx(math.exp(-0.5))
        assert grf_spike_times(c + s, p, 1.0)[3] == 4.0

    def test_centre_fires_at_zero(self):
        p = GrfParams()
        c, _ = grf_centers_widths(p)[2]
        assert grf_spike_times(c, p, 1.0)[2] == 0.0

    def test_below_fire_line_silent(self):
        p = GrfParams()
        c, s = grf_centers_widths(p)[0]
        x = c + s * math.sqrt(-2 * math.log(0.05))
        assert grf_responses(x, p)[0] == pytest.approx(0.05)
        assert grf_spike_times(x, p, 1.0)[0] is None

    def test_round_half_up(self):
        assert round_to_grid(3.5, 1.0) == 4.0
        assert round_to_grid(3.49, 1.0) == 3.0
        assert round_to_grid(0.125, 0.25) == 0.25

    @given(st.floats(0.1, 50.0), st.sampled_from([1.0, 0.5, 0.01]))
    def test_times_in_window_and_on_grid(self, x, dt):
        for t in grf_spike_times(x, GrfParams(), dt):
            if t is not None:
                assert 0 <= t <= 9.0 + dt
                assert abs(t / dt - round(t / dt)) < 1e-6

    def test_iris_sample(self):
        trains = encode_iris_sample([5.1, 3.5, 1.4, 0.2], GrfParams(), 1.0)
        assert len(trains) == 33
        assert trains[-1] == SpikeTrain((1.0,))
        assert any(len(t) for t in trains[:-1])
        with pytest.raises(ValueError):
            encode_iris_sample([1.0, 2.0], GrfParams(), 1.0)

    def test_no_reference(self):
        assert len(encode_features([1.0], GrfParams(), 1.0, reference=False)) == 8

    @pytest.mark.parametrize("kw", [dict(m=2), dict(i_max=0), dict(gamma=0), dict(fire_threshold=1)])
    def test_invalid_params(self, kw):
        with pytest.raises(ValueError):
            GrfParams(**kw)


class TestDecoding:
    @pytest.mark.parametrize(
        "spikes,expected",
        [
            ([16.2], "Setosa"),
            ([17.5], MISCLASSIFIED),
            ([], MISCLASSIFIED),
            ([22.0, 24.0], "Versicolor"),
            ([27.0], "Virginica"),
            ([12.9], MISCLASSIFIED),
        ],
    )
    def test_two_ms_rule(self, spikes, expected):
        assert decode_output_class(spikes, ClassTargets()) == expected

    def test_windows_disjoint(self):
        t = ClassTargets()
        spans = sorted((v - t.tolerance_ms, v + t.tolerance_ms) for v in t.times.values())
        assert all(a[1] < b[0] for a, b in zip(spans, spans[1:]))

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            ClassTargets({"a": 15.0, "b": 18.0})

    @given(st.floats(0, 50))
    def test_decoded_class_within_tolerance(self, t):
        targets = ClassTargets()
        c = decode_output_class([t], targets)
        if c != MISCLASSIFIED:
            assert abs(t - targets.target(c)) <= 2.0 + 1e-9
        else:
            assert np.all(np.abs(t - np.array(list(targets.times.values()))) > 2.0 - 1e-9)
