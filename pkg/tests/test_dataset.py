from collections import Counter

import pytest

from oxiread import (
    DisplayKind,
    GlyphRole,
    LayoutKind,
    ParseError,
    ValidationError,
    classify_group,
    generate_scene,
)
from oxiread.dataset import (
    AnnotatedImage,
    build_balanced_corpus,
    kfold_split,
    load_annotations,
    save_corpus,
    save_corpus_normbox,
    undersample_balance,
)
from oxiread.synthgen import GROUP_TAGS


@pytest.fixture(scope="module")
def small_corpus():
    return build_balanced_corpus(per_group=6, seed=11)


def group_counts(images):
    return Counter(img.group for img in images)


class TestBuildBalancedCorpus:
    def test_exact_group_balance(self, small_corpus):
        assert group_counts(small_corpus) == {tag: 6 for tag in GROUP_TAGS}

    def test_unique_ids(self, small_corpus):
        ids = [img.image_id for img in small_corpus]
        assert len(ids) == len(set(ids))

    def test_groups_match_scenes(self, small_corpus):
        for img in small_corpus:
            assert classify_group(img.scene) == img.group

    def test_deterministic(self):
        assert build_balanced_corpus(4, seed=3) == build_balanced_corpus(4, seed=3)
        assert build_balanced_corpus(4, seed=3) != build_balanced_corpus(4, seed=4)

    def test_upright_orientations(self):
        images = build_balanced_corpus(5, seed=2, orientations="upright")
        assert all(img.scene.true_orientation == 0 for img in images)

    def test_mixed_orientations_cover_all_turns(self):
        images = build_balanced_corpus(40, seed=2, orientations="mixed")
        seen = {img.scene.true_orientation for img in images}
        assert seen == {0, 90, 180, 270}

    def test_six_base_digits_force_a_third_group(self):
        # 100 spo2 + 3-digit pulse leaves k ambiguous without an extra group.
        for img in build_balanced_corpus(80, seed=5):
            digits = img.scene.digit_glyphs()
            base = [g for g in digits if g.role is not GlyphRole.EXTRA]
            if len(base) == 6:
                assert len(digits) > 6

    def test_never_five_digits_with_extra(self):
        for img in build_balanced_corpus(120, seed=9):
            n = len(img.scene.digit_glyphs())
            has_extra = any(g.role is GlyphRole.EXTRA for g in img.scene.digit_glyphs())
            if n == 5:
                assert not has_extra

    def test_bad_arguments(self):
        with pytest.raises(ValidationError):
            build_balanced_corpus(3, seed=0, orientations="sideways")
        with pytest.raises(ValidationError):
            build_balanced_corpus(-1, seed=0)

    def test_annotated_image_group_cross_checked(self):
        sc = generate_scene(LayoutKind.LARGER_SPO2, DisplayKind.SSD, 98, 72, 0, 0)
        with pytest.raises(ValidationError):
            AnnotatedImage(image_id="x", scene=sc, group="SSD-L")  # spo2 98 is N

    def test_gt_boxes_in_captured_frame(self, small_corpus):
        img = next(i for i in small_corpus if i.scene.true_orientation != 0)
        boxes = img.gt_boxes()
        assert len(boxes) == len(img.scene.glyphs)
        for (cls, box), glyph in zip(boxes, img.scene.glyphs):
            assert cls is glyph.glyph
            assert box == glyph.box
            assert box.within(img.dims)


class TestCorpusFiles:
    def test_native_round_trip(self, small_corpus, tmp_path):
        save_corpus(small_corpus, tmp_path)
        loaded = load_annotations(tmp_path)
        assert loaded == small_corpus

    def test_native_files_deterministic(self, small_corpus, tmp_path):
        save_corpus(small_corpus, tmp_path / "a")
        save_corpus(small_corpus, tmp_path / "b")
        for name in ("manifest.jsonl", "annotations.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_normbox_round_trip_recovers_roles_and_values(self, small_corpus, tmp_path):
        save_corpus_normbox(small_corpus, tmp_path)
        loaded = load_annotations(tmp_path, fmt="normbox")
        assert [img.image_id for img in loaded] == [img.image_id for img in small_corpus]
        for got, want in zip(loaded, small_corpus):
            assert got.group == want.group
            assert got.scene.spo2_true == want.scene.spo2_true
            assert got.scene.pr_true == want.scene.pr_true
            assert got.scene.group_values() == want.scene.group_values()
            for gg, wg in zip(got.scene.glyphs, want.scene.glyphs):
                assert gg.glyph is wg.glyph
                assert gg.role is wg.role
                assert gg.box.x_min == pytest.approx(wg.box.x_min, abs=1e-2)

    def test_normbox_writes_one_file_per_image(self, small_corpus, tmp_path):
        save_corpus_normbox(small_corpus, tmp_path)
        txts = sorted(p.name for p in tmp_path.glob("*.txt"))
        assert txts == sorted(f"{img.image_id}.txt" for img in small_corpus)

    def test_corrupt_manifest_line_numbered(self, small_corpus, tmp_path):
        save_corpus(small_corpus, tmp_path)
        manifest = tmp_path / "manifest.jsonl"
        manifest.write_text(manifest.read_text() + "oops\n")
        with pytest.raises(ParseError) as err:
            load_annotations(tmp_path)
        assert err.value.line_no == len(small_corpus) + 1

    def test_missing_annotation_header(self, small_corpus, tmp_path):
        save_corpus(small_corpus, tmp_path)
        ann = tmp_path / "annotations.jsonl"
        lines = ann.read_text().splitlines()
        ann.write_text("\n".join(lines[1:]) + "\n")
        with pytest.raises(ParseError):
            load_annotations(tmp_path)

    def test_unknown_image_id_in_annotations(self, small_corpus, tmp_path):
        save_corpus(small_corpus, tmp_path)
        ann = tmp_path / "annotations.jsonl"
        text = ann.read_text().replace(small_corpus[0].image_id, "ghost-image", 1)
        # First replacement hits the manifest-independent annotations file only.
        ann.write_text(text)
        with pytest.raises(ParseError):
            load_annotations(tmp_path)

    def test_inverted_box_is_validation_error(self, small_corpus, tmp_path):
        save_corpus(small_corpus, tmp_path)
        ann = tmp_path / "annotations.jsonl"
        lines = ann.read_text().splitlines()
        import json

        rec = json.loads(lines[1])
        rec["box"] = [rec["box"][2], rec["box"][1], rec["box"][0], rec["box"][3]]
        lines[1] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
        ann.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValidationError):
            load_annotations(tmp_path)

    def test_unknown_format_rejected(self, small_corpus, tmp_path):
        save_corpus(small_corpus, tmp_path)
        with pytest.raises(ValidationError):
            load_annotations(tmp_path, fmt="coco")


class TestUndersampleBalance:
    def make_unbalanced(self, sizes):
        pool = build_balanced_corpus(per_group=max(sizes.values()), seed=17)
        out = []
        taken = Counter()
        for img in pool:
            if taken[img.group] < sizes[img.group]:
                out.append(img)
                taken[img.group] += 1
        return out

    def test_exact_per_group_sampling(self):
        sizes = dict(zip(GROUP_TAGS, (238, 125, 437, 212)))
        images = self.make_unbalanced(sizes)
        balanced = undersample_balance(images, per_group=125, seed=0)
        assert len(balanced) == 500
        assert group_counts(balanced) == {tag: 125 for tag in GROUP_TAGS}

    def test_survivors_keep_input_order(self):
        images = self.make_unbalanced(dict(zip(GROUP_TAGS, (30, 20, 25, 40))))
        balanced = undersample_balance(images, per_group=15, seed=3)
        positions = {img.image_id: i for i, img in enumerate(images)}
        order = [positions[img.image_id] for img in balanced]
        assert order == sorted(order)

    def test_deterministic_across_seeds(self):
        images = self.make_unbalanced(dict(zip(GROUP_TAGS, (30, 20, 25, 40))))
        for seed in range(100):
            a = undersample_balance(images, per_group=12, seed=seed)
            b = undersample_balance(images, per_group=12, seed=seed)
            assert a == b
        assert undersample_balance(images, per_group=12, seed=0) != undersample_balance(
            images, per_group=12, seed=1
        )

    def test_insufficient_group_named_in_error(self):
        images = self.make_unbalanced(dict(zip(GROUP_TAGS, (30, 4, 25, 40))))
        lean_tag = GROUP_TAGS[1]
        with pytest.raises(ValidationError) as err:
            undersample_balance(images, per_group=10, seed=0)
        assert lean_tag in str(err.value)


class TestKFoldSplit:
    def test_balanced_folds_stay_stratified(self):
        images = build_balanced_corpus(per_group=25, seed=7)
        plan = kfold_split(images, folds=5, seed=0)
        assert plan.folds == 5
        by_image = {img.image_id: img for img in images}
        for fold in range(5):
            val = plan.validation_ids(fold)
            assert len(val) == 20
            assert group_counts(by_image[i] for i in val) == {tag: 5 for tag in GROUP_TAGS}

    def test_folds_partition_the_corpus(self):
        images = build_balanced_corpus(per_group=10, seed=1)
        plan = kfold_split(images, folds=4, seed=2)
        all_val = [i for fold in range(4) for i in plan.validation_ids(fold)]
        assert sorted(all_val) == sorted(img.image_id for img in images)
        for fold in range(4):
            train = set(plan.training_ids(fold))
            val = set(plan.validation_ids(fold))
            assert not train & val
            assert train | val == set(plan.assignments)

    def test_leave_one_out_on_tiny_groups(self):
        images = build_balanced_corpus(per_group=5, seed=3)
        plan = kfold_split(images, folds=5, seed=0)
        for fold in range(5):
            assert len(plan.validation_ids(fold)) == 4  # one per group

    def test_stratification_over_many_seeds(self):
        images = build_balanced_corpus(per_group=10, seed=4)
        for seed in range(10):
            plan = kfold_split(images, folds=5, seed=seed)
            by_image = {img.image_id: img for img in images}
            for fold in range(5):
                counts = group_counts(by_image[i] for i in plan.validation_ids(fold))
                assert counts == {tag: 2 for tag in GROUP_TAGS}

    def test_shuffling_depends_on_seed(self):
        images = build_balanced_corpus(per_group=10, seed=4)
        assert kfold_split(images, seed=0) != kfold_split(images, seed=1)
        assert kfold_split(images, seed=0) == kfold_split(images, seed=0)

    @pytest.mark.parametrize("folds", [0, 1])
    def test_too_few_folds(self, folds):
        images = build_balanced_corpus(per_group=3, seed=0)
        with pytest.raises(ValidationError):
            kfold_split(images, folds=folds)

    def test_sparse_groups_spread_at_most_one_apart(self):
        # 2 members per group over 5 folds: some folds get 0, none gets 2.
        images = build_balanced_corpus(per_group=2, seed=0)
        plan = kfold_split(images, folds=5)
        by_image = {img.image_id: img for img in images}
        for tag in GROUP_TAGS:
            per_fold = [
                sum(1 for i in plan.validation_ids(fold) if by_image[i].group == tag)
                for fold in range(5)
            ]
            assert max(per_fold) - min(per_fold) <= 1

    def test_sparse_groups_never_strand_a_fold(self):
        # Groups smaller than the fold count must not pile onto the early
        # folds; overall sizes stay within one of each other.
        images = build_balanced_corpus(per_group=3, seed=6)
        plan = kfold_split(images, folds=4, seed=0)
        sizes = sorted(len(plan.validation_ids(f)) for f in range(4))
        assert sizes == [3, 3, 3, 3]

    def test_five_images_five_folds_is_leave_one_out(self):
        images = build_balanced_corpus(per_group=2, seed=5)[:5]  # spans groups
        plan = kfold_split(images, folds=5, seed=1)
        assert sorted(len(plan.validation_ids(f)) for f in range(5)) == [1] * 5

    def test_folds_exceeding_corpus_rejected(self):
        images = build_balanced_corpus(per_group=1, seed=0)
        with pytest.raises(ValidationError):
            kfold_split(images, folds=5)
