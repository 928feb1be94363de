import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oxiread import (
    DEFAULT_NOISE,
    QUARTER_TURNS,
    ZERO_NOISE,
    BackendError,
    DetectionSet,
    DisplayKind,
    ImageDims,
    LayoutKind,
    MockDetector,
    generate_scene,
    median_confidence,
    rank_rotations,
)

from conftest import det, dset, replay


class TestMedianConfidence:
    def test_odd_count(self):
        ds = dset([det("1", 0, 0, 5, 5, c) for c in (0.9, 0.8, 0.7)])
        assert median_confidence(ds) == 0.8

    def test_even_count_averages(self):
        ds = dset([det("1", 0, 0, 5, 5, 0.9), det("2", 10, 0, 15, 5, 0.7)])
        assert median_confidence(ds) == pytest.approx(0.8)

    def test_empty_set_sentinel(self):
        assert median_confidence(dset([])) == 0.0

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=9))
    def test_agrees_with_statistics_median(self, confs):
        import statistics

        ds = dset([det("3", 10 * i, 0, 10 * i + 5, 5, c) for i, c in enumerate(confs)],
                  dims=ImageDims(200, 200))
        assert median_confidence(ds) == pytest.approx(statistics.median(confs))


class TestRankRotations:
    def test_zero_noise_top_is_true_orientation(self):
        for orientation in QUARTER_TURNS:
            sc = generate_scene(LayoutKind.LARGER_SPO2, DisplayKind.SSD, 97, 64, orientation, 5)
            ranked = rank_rotations(MockDetector(), sc)
            assert len(ranked) == 4
            assert ranked[0].rotation == orientation

    def test_permutation_and_sorted(self):
        sc = generate_scene(LayoutKind.EQUAL_WITH_SYMBOL, DisplayKind.DMD, 88, 120, 180, 2)
        ranked = rank_rotations(MockDetector(noise=DEFAULT_NOISE, seed=3), sc)
        assert sorted(c.rotation for c in ranked) == [0, 90, 180, 270]
        medians = [c.median_confidence for c in ranked]
        assert medians == sorted(medians, reverse=True)

    def test_all_empty_ties_follow_rotation_order(self):
        backend = replay({})
        ranked = rank_rotations(backend, None)
        assert [c.rotation for c in ranked] == [0, 90, 180, 270]
        assert all(c.median_confidence == 0.0 for c in ranked)

    def test_equal_medians_keep_rotation_order(self):
        ds = {r: dset([det("5", 0, 0, 10, 10, 0.6)], rotation=r) for r in QUARTER_TURNS}
        ranked = rank_rotations(replay(ds), None)
        assert [c.rotation for c in ranked] == [0, 90, 180, 270]

    def test_single_loud_rotation_wins(self):
        quiet = [det("5", 0, 0, 10, 10, 0.3)]
        loud = [det("5", 0, 0, 10, 10, 0.9)]
        sets = {
            0: dset(quiet, rotation=0),
            90: dset(loud, rotation=90),
            180: dset(quiet, rotation=180),
            270: dset(quiet, rotation=270),
        }
        ranked = rank_rotations(replay(sets), None)
        assert [c.rotation for c in ranked] == [90, 0, 180, 270]

    def test_median_uses_digits_only(self):
        # A wildly confident symbol must not outrank digit evidence.
        sets = {
            0: dset([det("5", 0, 0, 10, 10, 0.8)], rotation=0),
            90: dset([det("5", 0, 0, 10, 10, 0.2), det("%", 20, 0, 30, 10, 1.0)], rotation=90),
        }
        ranked = rank_rotations(replay(sets), None)
        assert ranked[0].rotation == 0
        assert ranked[0].median_confidence == pytest.approx(0.8)

    def test_candidates_carry_symbols(self):
        sc = generate_scene(LayoutKind.EQUAL_WITH_SYMBOL, DisplayKind.SSD, 95, 60, 0, 7)
        ranked = rank_rotations(MockDetector(), sc)
        assert all(len(c.symbols) == 1 for c in ranked)

    def test_backend_error_propagates(self):
        class Exploding:
            supported_resolutions = (640,)

            def detect(self, scene_ref, rotation):
                raise BackendError("detector offline")

            def detect_symbols(self, scene_ref, rotation):
                return DetectionSet((), ImageDims(640, 640), rotation)

        with pytest.raises(BackendError):
            rank_rotations(Exploding(), None)

    @given(st.floats(0.01, 1.0), st.integers(0, 50))
    @settings(max_examples=60, deadline=None)
    def test_scaling_confidences_preserves_order(self, c, seed):
        sc = generate_scene(LayoutKind.LARGER_SPO2, DisplayKind.SSD, 92, 150, 90, seed)
        base = rank_rotations(MockDetector(noise=DEFAULT_NOISE, seed=seed), sc)

        scaled_sets = {}
        backend = MockDetector(noise=DEFAULT_NOISE, seed=seed)
        for rot in QUARTER_TURNS:
            digits = backend.detect(sc, rot)
            symbols = backend.detect_symbols(sc, rot)
            dets = tuple(
                type(d)(d.glyph, d.box, d.confidence * c) for d in (*digits, *symbols)
            )
            scaled_sets[rot] = DetectionSet(dets, digits.dims, rot)
        scaled = rank_rotations(replay(scaled_sets, dims=sc.dims), None)
        assert [x.rotation for x in scaled] == [x.rotation for x in base]
