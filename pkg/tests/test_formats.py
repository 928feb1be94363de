import pytest

from oxiread import (
    AssignmentRule,
    BBox,
    CandidateDiagnostic,
    FailureReason,
    GlyphClass,
    ImageDims,
    ParseError,
    ReadFailure,
    ValidationError,
    VitalsReading,
)
from oxiread.formats import (
    detection_records,
    detection_sets_from_records,
    dump_record,
    normbox_line,
    parse_normbox_line,
    read_jsonl,
    reading_from_record,
    reading_record,
    write_jsonl,
)

from conftest import det, dset


class TestJsonl:
    def test_dump_is_key_sorted_and_compact(self):
        assert dump_record({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'

    def test_write_read_round_trip(self, tmp_path):
        path = tmp_path / "r.jsonl"
        records = [{"i": 0}, {"i": 1, "x": "y"}]
        write_jsonl(path, records)
        assert [rec for _, rec in read_jsonl(path)] == records
        assert [n for n, _ in read_jsonl(path)] == [1, 2]

    def test_identical_records_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        records = [{"z": 1.5, "a": "x"}]
        write_jsonl(a, records)
        write_jsonl(b, [dict(reversed(list(records[0].items())))])
        assert a.read_bytes() == b.read_bytes()

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"ok": 1}\nnot json\n')
        with pytest.raises(ParseError) as err:
            list(read_jsonl(path))
        assert err.value.line_no == 2

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "arr.jsonl"
        path.write_text("[1,2]\n")
        with pytest.raises(ParseError):
            list(read_jsonl(path))

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "gaps.jsonl"
        path.write_text('{"i":0}\n\n{"i":1}\n')
        assert [rec["i"] for _, rec in read_jsonl(path)] == [0, 1]


class TestDetectionInterchange:
    def test_round_trip(self):
        ds = dset([det("9", 1, 2, 11, 22, 0.75), det("%", 30, 2, 40, 22, 0.5)], rotation=90,
                  dims=ImageDims(640, 640))
        records = detection_records("img-1", ds)
        rebuilt = detection_sets_from_records(list(enumerate(records, start=1)))
        assert rebuilt == {("img-1", 90): ds}

    def test_multiple_images_and_rotations(self):
        a = dset([det("1", 0, 0, 10, 10)], rotation=0)
        b = dset([det("2", 0, 0, 10, 10)], rotation=180)
        records = detection_records("a", a) + detection_records("b", b)
        rebuilt = detection_sets_from_records(list(enumerate(records, start=1)))
        assert set(rebuilt) == {("a", 0), ("b", 180)}

    def test_missing_field_is_parse_error(self):
        rec = {"image_id": "a", "glyph": "9"}
        with pytest.raises(ParseError) as err:
            detection_sets_from_records([(3, rec)])
        assert err.value.line_no == 3

    def test_unknown_glyph_is_validation_error(self):
        rec = detection_records("a", dset([det("9", 0, 0, 10, 10)]))[0]
        rec["glyph"] = "q"
        with pytest.raises(ValidationError):
            detection_sets_from_records([(1, rec)])

    def test_inverted_box_is_validation_error(self):
        rec = detection_records("a", dset([det("9", 0, 0, 10, 10)]))[0]
        rec["box"] = [10, 0, 0, 10]
        with pytest.raises(ValidationError):
            detection_sets_from_records([(1, rec)])

    def test_inconsistent_dims_rejected(self):
        rec1 = detection_records("a", dset([det("9", 0, 0, 10, 10)]))[0]
        rec2 = dict(rec1, width=1280, height=1280)
        with pytest.raises(ParseError):
            detection_sets_from_records([(1, rec1), (2, rec2)])


class TestReadingRecords:
    def test_ok_round_trip(self):
        reading = VitalsReading(
            spo2=97, pr=64, rotation_used=270, median_conf=0.825,
            assignment_rule=AssignmentRule.SYMBOL_DISTANCE, pruned=True,
        )
        record = reading_record("img-7", reading)
        assert record["status"] == "ok"
        image_id, back = reading_from_record(record)
        assert image_id == "img-7"
        assert back == reading

    def test_failed_round_trip(self):
        failure = ReadFailure(
            reason=FailureReason.RANGE_VIOLATION_ALL_ROTATIONS,
            diagnostics=(
                CandidateDiagnostic(rotation=0, median_conf=0.3, n_digits=4, note="range violation"),
            ),
        )
        record = reading_record("img-8", failure)
        assert record["status"] == "failed"
        _, back = reading_from_record(record)
        assert back == failure

    def test_unknown_status(self):
        with pytest.raises(ParseError):
            reading_from_record({"image_id": "x", "status": "maybe"})

    def test_missing_fields(self):
        with pytest.raises(ParseError):
            reading_from_record({"image_id": "x", "status": "ok", "spo2": 98})


class TestNormalizedBoxes:
    def test_line_format(self):
        line = normbox_line(GlyphClass.D9, BBox(288, 256, 352, 384), ImageDims(640, 640))
        assert line == "9 0.500000 0.500000 0.100000 0.200000"

    def test_parse_denormalizes(self):
        cls, box = parse_normbox_line("9 0.5 0.5 0.1 0.2", ImageDims(640, 640))
        assert cls is GlyphClass.D9
        assert box == BBox(288, 256, 352, 384)

    def test_symbol_class_ids(self):
        line = normbox_line(GlyphClass.PERCENT, BBox(0, 0, 64, 64), ImageDims(640, 640))
        assert line.split()[0] == "10"
        cls, _ = parse_normbox_line(line, ImageDims(640, 640))
        assert cls is GlyphClass.PERCENT

    def test_round_trip_within_line_precision(self):
        dims = ImageDims(1280, 1280)
        original = BBox(17.3, 244.9, 63.7, 301.2)
        cls, back = parse_normbox_line(normbox_line(GlyphClass.D4, original, dims), dims)
        for a, b in [(original.x_min, back.x_min), (original.y_max, back.y_max)]:
            assert a == pytest.approx(b, abs=1e-2)  # 6 decimals of a 1280px axis

    def test_field_count_enforced(self):
        with pytest.raises(ParseError):
            parse_normbox_line("9 0.5 0.5 0.1", ImageDims(640, 640))

    def test_unknown_class_id(self):
        with pytest.raises(ParseError):
            parse_normbox_line("13 0.5 0.5 0.1 0.2", ImageDims(640, 640))

    def test_non_numeric_field(self):
        with pytest.raises(ParseError):
            parse_normbox_line("9 a b c d", ImageDims(640, 640))

    def test_degenerate_box_is_validation_error(self):
        with pytest.raises(ValidationError):
            parse_normbox_line("9 0.5 0.5 0.0 0.2", ImageDims(640, 640))
