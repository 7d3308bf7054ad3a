import pytest
from hypothesis import given, settings, strategies as st

from wsnfault.conversion import EngineeringInstance
from wsnfault.windows import (
    EmptyGroup,
    IncompleteWindow,
    NodeStore,
    NonMonotonicTimestamp,
    WindowConfig,
    WindowFileError,
    build_dataset,
    feature_names,
    features_for,
    load,
    minute_average,
    persist,
    read_instances,
    rollover,
    seconds_of_day,
    snapshot_training_set,
    window_path,
    write_instances,
)

SMALL = WindowConfig(short_len=60, avg_group=5, long_len=24)


def inst(ts, v=1.0, node=1):
    return EngineeringInstance(node, ts, v, v + 1, v + 2, v + 3, v + 4)


def fill(store, n, start=0):
    return [store.append(inst(1000 * (start + i), float(start + i + 1), store.node_id)) for i in range(n)]


def test_scaled_dimensions_after_sixty_appends():
    s = NodeStore(1, SMALL)
    outs = fill(s, 60)
    assert len(s.short_buffer) == 60
    assert len(s.long_buffer) == 12
    assert sum(o.long_entry_added for o in outs) == 12
    assert [i for i, o in enumerate(outs) if o.short_cycle_complete] == [59]


def test_minute_average_of_one_to_sixty():
    group = [inst(i, float(i)) for i in range(1, 61)]
    avg = minute_average(group)
    assert avg.light == 30.5
    assert avg.voltage == 34.5
    assert avg.timestamp_ms == 60


def test_minute_average_empty():
    with pytest.raises(EmptyGroup):
        minute_average([])


def test_long_cycle_completion():
    s = NodeStore(1, SMALL)
    outs = fill(s, 120)
    done = [i for i, o in enumerate(outs) if o.long_cycle_complete]
    assert done == [119]
    assert len(s.long_buffer) == 24


def test_short_buffer_evicts_oldest():
    s = NodeStore(1, SMALL)
    fill(s, 65)
    assert len(s.short_buffer) == 60
    assert s.short_buffer[0].timestamp_ms == 5000


def test_rejects_non_monotonic():
    s = NodeStore(1, SMALL)
    s.append(inst(10))
    with pytest.raises(NonMonotonicTimestamp):
        s.append(inst(10))


def test_snapshot_and_rollover():
    s = NodeStore(1, SMALL)
    fill(s, 30)
    with pytest.raises(IncompleteWindow):
        snapshot_training_set(s, "short", "temperature")
    fill(s, 30, start=30)
    d = snapshot_training_set(s, "short", "temperature")
    assert d.n_rows == 60 and d.feature_names == feature_names("temperature")
    rollover(s, "short")
    assert s.short_buffer == [] and len(s.long_buffer) == 12


def test_features():
    assert feature_names("temperature") == ("time_of_day_s", "light", "accel_x", "accel_y", "voltage")
    assert seconds_of_day(86_400_000 + 3_600_500) == 3600.5
    i = EngineeringInstance(1, 3_600_000, 1.0, 2.0, 3.0, 4.0, 5.0)
    assert features_for(i, "light") == [3600.0, 2.0, 3.0, 4.0, 5.0]
    d = build_dataset([i, inst(4_000_000)], "voltage")
    assert d.y.tolist() == [5.0, 5.0]


def test_persist_and_load_roundtrip(tmp_path):
    s = NodeStore(7, SMALL)
    fill(s, 63)
    persist(s, tmp_path)
    for which in ("short", "long", "pending"):
        assert window_path(tmp_path, 7, which).exists()
    back = load(tmp_path, 7, SMALL)
    assert back == s
    assert back.last_timestamp_ms == s.last_timestamp_ms
    with pytest.raises(NonMonotonicTimestamp):
        back.append(inst(1000))


def test_csv_six_decimals(tmp_path):
    p = tmp_path / "w.csv"
    write_instances(p, [EngineeringInstance(1, 5, 1 / 3, 2.0, 3.0, 4.0, 5.0)])
    lines = p.read_text().splitlines()
    assert lines[0] == "timestamp_ms,light_pct,temp_c,accel_x_g,accel_y_g,voltage_v"
    assert lines[1] == "5,0.333333,2.000000,3.000000,4.000000,5.000000"


def test_malformed_rows_name_the_line(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("timestamp_ms,light_pct,temp_c,accel_x_g,accel_y_g,voltage_v\n1,1,1,1,1,1\n2,1,1,1\n")
    with pytest.raises(WindowFileError) as e:
        read_instances(p, 1)
    assert e.value.line == 3
    p.write_text("bad header\n")
    with pytest.raises(WindowFileError) as e:
        read_instances(p, 1)
    assert e.value.line == 1


def test_load_rejects_oversized_window(tmp_path):
    write_instances(window_path(tmp_path, 1, "short"), [inst(i) for i in range(61)])
    with pytest.raises(WindowFileError):
        load(tmp_path, 1, SMALL)


@settings(max_examples=40, deadline=None)
@given(
    short_len=st.integers(1, 20),
    group=st.integers(1, 6),
    long_len=st.integers(1, 8),
    n=st.integers(0, 150),
)
def test_buffer_invariants(short_len, group, long_len, n):
    cfg = WindowConfig(short_len=short_len, avg_group=group, long_len=long_len)
    s = NodeStore(1, cfg)
    fill(s, n)
    assert len(s.short_buffer) == min(n, short_len)
    assert len(s.long_buffer) == min(n // group, long_len)
    assert len(s.pending_group) == n % group
    for buf in (s.short_buffer, s.long_buffer):
        stamps = [i.timestamp_ms for i in buf]
        assert stamps == sorted(set(stamps))
