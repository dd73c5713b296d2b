import pytest

from wavecast import ParseError, parse_env_table
from wavecast.timefmt import parse_utc

TABLE = """\
storm_id,timestamp,shear_kt,rh_mid
AL092020,2020-10-31T18:00:00Z,12.5,61.0
AL092020,2020-11-01T00:00:00Z,,58.5
EP052019,2019-07-04T06:00:00Z,8.0,70.0
"""


def test_rows_parse_with_preserved_predictor_order():
    records = parse_env_table(TABLE)
    assert len(records) == 3
    first = records[0]
    assert first.storm_id == "AL092020"
    assert first.timestamp == parse_utc("2020-10-31T18:00:00Z")
    assert list(first.predictors) == ["shear_kt", "rh_mid"]
    assert first.predictors["shear_kt"] == 12.5


def test_empty_cell_is_missing_not_zero():
    records = parse_env_table(TABLE)
    assert records[1].predictors["shear_kt"] is None
    assert records[1].predictors["rh_mid"] == 58.5


def test_blank_lines_are_skipped():
    assert len(parse_env_table(TABLE + "\n\n")) == 3


def test_mandatory_columns_required():
    with pytest.raises(ParseError):
        parse_env_table("storm_id,shear_kt\nAL092020,5.0\n")
    with pytest.raises(ParseError):
        parse_env_table("")


def test_off_grid_timestamp_rejected():
    bad = TABLE.replace("18:00:00", "19:00:00")
    with pytest.raises(ParseError) as err:
        parse_env_table(bad)
    assert err.value.line == 2


def test_duplicate_storm_time_rejected():
    dup = TABLE + "AL092020,2020-10-31T18:00:00Z,1.0,2.0\n"
    with pytest.raises(ParseError) as err:
        parse_env_table(dup)
    assert err.value.line == 5


def test_non_numeric_cell_rejected():
    with pytest.raises(ParseError):
        parse_env_table(TABLE.replace("61.0", "warm"))


def test_ragged_row_rejected():
    with pytest.raises(ParseError):
        parse_env_table("storm_id,timestamp,x\nAL092020,2020-10-31T18:00:00Z\n")
