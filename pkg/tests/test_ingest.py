"""Trace parsing, normalization, and the canonical format round trip."""

import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosubmit.ingest import (
    CANONICAL_COLUMNS,
    ColumnMap,
    JobRecord,
    ParseError,
    build_stream,
    normalize,
    parse_delimited,
    parse_swf,
    write_canonical,
)


def swf_line(submit, user, group, njobs_fields=18):
    fields = ["1"] * njobs_fields
    fields[1] = str(submit)
    fields[11] = str(user)
    fields[12] = str(group)
    return " ".join(fields)


class TestParseSwf:
    def test_single_record_by_field_positions(self):
        data = ("; comment line\n" + swf_line(100, "u7", "g1") + "\n").encode()
        ds = parse_swf(data)
        assert ds.parse_errors == 0
        assert ds.groups() == ("g1",)
        rec = ds.streams["g1"].records[0]
        assert (rec.user_id, rec.submit_time, rec.group_id) == ("u7", 100, "g1")

    def test_empty_file(self):
        ds = parse_swf(b"")
        assert ds.streams == {}
        assert ds.parse_errors == 0
        assert ds.total_records == 0

    def test_records_come_out_time_sorted(self):
        data = (swf_line(200, "a", "g") + "\n" + swf_line(100, "b", "g") + "\n").encode()
        ds = parse_swf(data)
        times = [r.submit_time for r in ds.streams["g"].records]
        assert times == [100, 200]

    def test_unknown_user_dropped_and_counted(self):
        data = (swf_line(5, "-1", "g") + "\n" + swf_line(9, "u1", "g") + "\n").encode()
        ds = parse_swf(data)
        assert ds.parse_errors == 1
        assert ds.total_records == 1

    def test_malformed_lines_counted_and_skipped(self):
        data = ("1 2 3\n" + swf_line("notanumber", "u1", "g") + "\n" + swf_line(7, "u1", "g") + "\n").encode()
        ds = parse_swf(data)
        assert ds.parse_errors == 2
        assert ds.total_records == 1

    def test_entirely_unparseable_raises_naming_first_bad_line(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_swf(b"only three fields here\nand another bad one\n")

    def test_negative_submit_time_is_malformed(self):
        ds = parse_swf((swf_line(-5, "u1", "g") + "\n" + swf_line(2, "u2", "g") + "\n").encode())
        assert ds.parse_errors == 1

    def test_groups_split_and_counts_sum(self):
        lines = [swf_line(1, "a", "g1"), swf_line(2, "b", "g2"), swf_line(3, "a", "g1")]
        ds = parse_swf(("\n".join(lines) + "\n").encode())
        assert sorted(ds.groups()) == ["g1", "g2"]
        assert ds.total_records == 3
        assert len(ds.streams["g1"]) == 2


class TestParseDelimited:
    CM = ColumnMap(user_col=0, time_col=1, has_header=True)

    def test_two_row_csv(self):
        ds = parse_delimited(b"user,time\na,10\nb,20", self.CM)
        recs = ds.streams[""].records
        assert [(r.user_id, r.submit_time) for r in recs] == [("a", 10), ("b", 20)]

    def test_delimiter_independence(self):
        semi = ColumnMap(user_col=0, time_col=1, delimiter=";", has_header=True)
        a = parse_delimited(b"user,time\na,10\nb,20", self.CM)
        b = parse_delimited(b"user;time\na;10\nb;20", semi)
        assert a.streams[""] == b.streams[""]

    def test_duplicate_rows_are_both_kept(self):
        ds = parse_delimited(b"user,time\na,10\na,10", self.CM)
        assert ds.total_records == 2  # duplicates are legal submissions

    def test_missing_column_counted_and_skipped(self):
        cm = ColumnMap(user_col=0, time_col=2, has_header=False)
        ds = parse_delimited(b"a,x,10\nb,y\nc,z,30", cm)
        assert ds.parse_errors == 1
        assert ds.total_records == 2

    def test_subsecond_times_truncate_toward_zero(self):
        ds = parse_delimited(b"a,10.9", ColumnMap(user_col=0, time_col=1))
        assert ds.streams[""].records[0].submit_time == 10

    def test_group_column(self):
        cm = ColumnMap(user_col=0, time_col=1, group_col=2)
        ds = parse_delimited(b"a,10,g1\nb,20,g2", cm)
        assert sorted(ds.groups()) == ["g1", "g2"]

    def test_empty_group_field_means_no_group(self):
        cm = ColumnMap(user_col=0, time_col=1, group_col=2)
        ds = parse_delimited(b"a,10,", cm)
        assert ds.streams[""].records[0].group_id is None


class TestNormalize:
    def _dataset(self):
        cm = ColumnMap(user_col=0, time_col=1, group_col=2)
        return parse_delimited(b"a,10,1\nb,5,2\na,30,1\nb,20,2\nb,1,2", cm)

    def test_group_selection(self):
        stream = normalize(self._dataset(), group="1")
        assert all(r.group_id == "1" for r in stream.records)
        assert len(stream) == 2

    def test_unknown_group_lists_available(self):
        with pytest.raises(ValueError, match="available groups"):
            normalize(self._dataset(), group="nope")

    def test_min_jobs_filter(self):
        cm = ColumnMap(user_col=0, time_col=1)
        ds = parse_delimited(b"a,10\nb,1\nb,2\nb,3", cm)
        stream = normalize(ds, min_jobs_per_user=2)
        assert stream.user_registry == ("b",)
        assert len(stream) == 3

    def test_merge_is_global_sort_of_concatenation(self):
        ds = self._dataset()
        merged = normalize(ds)
        raw = [rec for s in ds.streams.values() for rec in s.records]
        assert merged == build_stream(raw)
        assert [r.submit_time for r in merged.records] == sorted(r.submit_time for r in raw)


class TestStreamInvariants:
    def test_tie_break_user_then_original_order(self):
        records = [
            JobRecord("b", 10, seq=0),
            JobRecord("a", 10, seq=1),
            JobRecord("a", 10, seq=2),
        ]
        stream = build_stream(records)
        assert [(r.user_id, r.seq) for r in stream.records] == [("a", 1), ("a", 2), ("b", 0)]

    def test_registry_is_dense_first_appearance(self):
        stream = build_stream([JobRecord("z", 5), JobRecord("m", 1), JobRecord("z", 2)])
        assert stream.user_registry == ("m", "z")  # m at t=1 leads the sorted stream
        assert stream.user_index == {"m": 0, "z": 1}

    def test_user_times_are_sorted_per_user(self):
        stream = build_stream([JobRecord("a", 9), JobRecord("a", 3), JobRecord("a", 6)])
        assert stream.user_times[0].tolist() == [3, 6, 9]

    def test_record_validation(self):
        with pytest.raises(ValueError):
            JobRecord("", 1)
        with pytest.raises(ValueError):
            JobRecord("a", -1)


users_st = st.text(alphabet="abcxyz", min_size=1, max_size=3)
records_st = st.lists(
    st.builds(
        JobRecord,
        user_id=users_st,
        submit_time=st.integers(min_value=0, max_value=5000),
        group_id=st.sampled_from([None, "g1", "g2"]),
    ),
    min_size=0,
    max_size=60,
)


class TestCanonicalRoundTrip:
    def test_example_round_trip(self):
        stream = build_stream(
            [JobRecord("a", 10, "g1"), JobRecord("b", 5, None), JobRecord("a", 5, "g2")]
        )
        buf = io.StringIO()
        write_canonical(stream, buf)
        reparsed = normalize(parse_delimited(buf.getvalue().encode(), CANONICAL_COLUMNS))
        assert reparsed == stream

    @given(records_st)
    @settings(max_examples=120)
    def test_round_trip_property(self, records):
        stream = build_stream(
            [JobRecord(r.user_id, r.submit_time, r.group_id, seq=i) for i, r in enumerate(records)]
        )
        buf = io.StringIO()
        write_canonical(stream, buf)
        reparsed = normalize(parse_delimited(buf.getvalue().encode(), CANONICAL_COLUMNS))
        assert reparsed == stream

    def test_parse_is_deterministic_byte_identical_output(self):
        raw = b"user,time,group\nb,7,g1\na,7,g1\na,3,\nb,3,g2\n"
        outputs = []
        for _ in range(2):
            stream = normalize(parse_delimited(raw, CANONICAL_COLUMNS))
            buf = io.StringIO()
            write_canonical(stream, buf)
            outputs.append(buf.getvalue())
        assert outputs[0] == outputs[1]

    def test_lf_line_endings_and_header(self):
        stream = build_stream([JobRecord("a", 1, "g")])
        buf = io.StringIO()
        write_canonical(stream, buf)
        assert buf.getvalue() == "user,time,group\na,1,g\n"
