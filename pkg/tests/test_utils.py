import math
from fractions import Fraction

import polars as pl
import pytest

from src.models.topological_entropy import CountRecord
from src.utils.cache import memoize
from src.utils.config import Config
from src.utils.data_transformations import count_frame, read_table, to_units, write_table
from src.utils.exact_log import ZERO, ExactLog


def test_exact_log_arithmetic():
    assert ExactLog.log_int(12) == ExactLog.log_int(2) * 2 + ExactLog.log_int(3)
    assert ExactLog.neg_log(Fraction(1, 4)) == ExactLog.log_int(4)
    assert (ExactLog.log_int(6) - ExactLog.log_int(6)).is_zero
    assert ExactLog.log_int(1) == ZERO
    assert float(ExactLog.neg_log(Fraction(3, 4))) == pytest.approx(math.log(4 / 3))
    assert str(ExactLog.log_int(8)) == "3*log(2)"
    with pytest.raises(ValueError):
        ExactLog.log_int(0)
    with pytest.raises(ValueError):
        ExactLog.neg_log(Fraction(0))


def test_memoize_reuses_results(fresh_cache):
    calls = []

    @memoize
    def square(x):
        calls.append(x)
        return x * x

    assert square(3) == 9
    assert square(3) == 9
    assert square(4) == 16
    assert calls == [3, 4]
    stats = fresh_cache.get_stats()
    assert stats["cache_hits"] == 1
    assert stats["computations"] == 2


def test_config_defaults_and_overrides():
    config = Config()
    assert config.get("budgets", "clique") == 4096
    assert config.get("budgets", "missing", default=7) == 7
    config.override("runtime", "workers", 1)
    assert config.workers == 1


def test_count_frame_keeps_huge_counts_exact():
    record = CountRecord(200, 0.3, "separated", 2 ** 202, "closed_form")
    frame = count_frame([record])
    assert frame["count"][0] == str(2 ** 202)
    assert frame["log_count"][0] == pytest.approx(202 * math.log(2))


def test_units_convert_entropy_columns_only():
    frame = pl.DataFrame({"n": [1, 2], "raw": [math.log(2), math.log(4)], "coords": [2, 3]})
    bits = to_units(frame, "bits")
    assert bits["raw"].to_list() == pytest.approx([1.0, 2.0])
    assert bits["n"].to_list() == [1, 2]
    assert to_units(frame, "nats") is frame
    with pytest.raises(ValueError):
        to_units(frame, "decibans")


def test_tables_carry_their_header(tmp_path):
    frame = pl.DataFrame({"n": [1], "value": [math.log(2)]})
    path = write_table(frame, tmp_path / "nested" / "table", "csv", {"experiment": "probe"}, "bits")
    assert path.name == "table.csv"
    assert path.read_text().splitlines()[:2] == ["# experiment=probe", "# units=bits"]
    assert read_table(path)["value"][0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        write_table(frame, tmp_path / "table", "parquet")
