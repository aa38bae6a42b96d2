"""Config grammar, sweep orchestration, CSV layout, and results loading."""

import csv
import statistics

import pytest

from ecasim import (ConfigError, ConsistencyError, Protocol, SimConfig,
                    SweepSpec)
import ecasim.sweep as sweep_mod
from ecasim.sweep import (CSV_COLUMNS, ECHO_NAME, FAULT_MARKER,
                          METRIC_COLUMNS, RESULTS_NAME, ProtocolVariant,
                          load_results, parse_config, parse_config_file,
                          parse_config_with_overrides, parse_variant,
                          run_sweep, worker_count, write_results_csv)


def _tiny_spec(tmp_path, **kw):
    base = SimConfig(arrival_rate=2000.0, sim_slots=400, warmup_slots=100)
    spec = SweepSpec(base=base, node_counts=[2, 3], seeds=[1, 2],
                     output_dir=str(tmp_path / "out"))
    for key, value in kw.items():
        setattr(spec, key, value)
    return spec


# -- config grammar -----------------------------------------------------------

def test_minimal_config_uses_defaults():
    spec = parse_config("node_counts = 5,10\n")
    assert spec.node_counts == [5, 10]
    assert [v.label for v in spec.variants] == ["csma-ca", "csma-eca"]
    assert spec.seeds == [1, 2, 3]
    assert spec.output_dir == "results"
    assert spec.base.arrival_rate == 100.0


def test_lists_accept_commas_and_repeated_keys():
    spec = parse_config("""
        node_counts = 2,4
        node_counts = 8
        seeds = 1
        seeds = 2, 3
        protocol = csma-ca, csma-eca
        protocol = csma-ca agg=16
    """)
    assert spec.node_counts == [2, 4, 8]
    assert spec.seeds == [1, 2, 3]
    assert [v.label for v in spec.variants] == ["csma-ca", "csma-eca",
                                                "csma-ca-agg16"]


def test_variant_flags():
    v = parse_variant("csma-ca agg=16")
    assert v == ProtocolVariant(Protocol.CSMA_CA, max_aggregation=16)
    assert v.label == "csma-ca-agg16"
    assert v.spelling() == "csma-ca agg=16"
    v = parse_variant("csma-eca hyst")
    assert v.hysteresis and v.label == "csma-eca-hyst"


def test_saturated_arrival_rate_spellings():
    for word in ("saturated", "inf", "SATURATED"):
        spec = parse_config(f"node_counts = 2\narrival_rate = {word}\n")
        assert spec.base.saturated


def test_comments_and_blank_lines_are_ignored():
    spec = parse_config("# header\n\nnode_counts = 2 # trailing\n")
    assert spec.node_counts == [2]


@pytest.mark.parametrize("text,fragment", [
    ("node_counts = 2\nbogus = 1\n", ":2: unknown key 'bogus'"),
    ("node_counts = 10,5\n", "strictly increasing"),
    ("node_counts = 2\nseeds = x\n", "seeds expects an integer, got 'x'"),
    ("node_counts = 2\ncw_min = 8\ncw_min = 16\n", "already set on line 2"),
    ("node_counts = 2\nprotocol = aloha\n", "unknown protocol 'aloha'"),
    ("node_counts = 2\nprotocol = csma-ca\nprotocol = csma-ca\n",
     "duplicate protocol entries"),
    ("node_counts = 2\nprotocol = csma-ca hyst\n", "hysteresis"),
    ("node_counts = 2\nprotocol = csma-ca turbo\n",
     "unknown protocol flag 'turbo'"),
    ("node_counts = 2\ncw_min = 15\n", "power of two"),
    ("node_counts = 2\narrival_rate = fast\n", "expects a number"),
    ("node_counts = 2\njust some words\n", "expected key = value"),
    ("", "node_counts is required"),
], ids=["unknown-key", "unsorted-nodes", "bad-int", "repeated-scalar",
        "unknown-protocol", "duplicate-protocol", "hyst-on-ca",
        "unknown-flag", "bad-cw", "bad-rate", "no-assignment",
        "missing-nodes"])
def test_config_errors_name_the_problem(text, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert fragment in str(err.value)


def test_error_messages_carry_the_source_name(tmp_path):
    path = tmp_path / "sweep.conf"
    path.write_text("node_counts = 2\nbogus = 1\n")
    with pytest.raises(ConfigError) as err:
        parse_config_file(path)
    assert str(path) in str(err.value)
    assert ":2:" in str(err.value)


def test_resolved_text_round_trips():
    spec = parse_config("""
        node_counts = 2,6
        seeds = 4,5
        protocol = csma-eca hyst
        protocol = csma-ca agg=16
        arrival_rate = saturated
        cw_min = 32
        payload_bits = 8000
        slot_empty = 10.5
    """)
    echo = spec.resolved_text()
    again = parse_config(echo)
    assert again.resolved_text() == echo
    assert again.base.cw_min == 32
    assert again.base.timing.payload_bits == 8000
    assert again.base.timing.slot_empty == 10.5
    assert [v.label for v in again.variants] == ["csma-eca-hyst",
                                                 "csma-ca-agg16"]


def test_overrides_replace_file_values(tmp_path):
    path = tmp_path / "sweep.conf"
    path.write_text("node_counts = 2\nseeds = 1,2\ncw_min = 16\n")
    spec = parse_config_with_overrides(path, ["seeds=7", "cw_min = 32"])
    assert spec.seeds == [7]
    assert spec.base.cw_min == 32
    with pytest.raises(ConfigError, match="not key=value"):
        parse_config_with_overrides(path, ["seeds7"])


def test_variant_aggregation_overrides_the_base_value():
    spec = parse_config("node_counts = 2\nmax_aggregation = 4\n"
                        "protocol = csma-ca\nprotocol = csma-ca agg=16\n")
    plain, agg = spec.variants
    assert spec.config_for(plain, 2, 1).max_aggregation == 4
    assert spec.config_for(agg, 2, 1).max_aggregation == 16


def test_run_keys_enumerate_in_fixed_order(tmp_path):
    spec = _tiny_spec(tmp_path)
    keys = [(v.label, n, s) for v, n, s in spec.run_keys()]
    assert keys == [("csma-ca", 2, 1), ("csma-ca", 2, 2),
                    ("csma-ca", 3, 1), ("csma-ca", 3, 2),
                    ("csma-eca", 2, 1), ("csma-eca", 2, 2),
                    ("csma-eca", 3, 1), ("csma-eca", 3, 2)]


# -- execution and CSV --------------------------------------------------------

def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_sweep_writes_seed_rows_then_aggregates(tmp_path):
    spec = _tiny_spec(tmp_path)
    results = run_sweep(spec, workers=1)
    out = tmp_path / "out"
    rows = _read_rows(out / RESULTS_NAME)
    assert rows[0] == CSV_COLUMNS
    body = rows[1:]
    # 8 seed rows plus mean and stddev for each of the 4 cells
    assert len(body) == 8 + 8
    assert [r[2] for r in body[:4]] == ["1", "2", "mean", "stddev"]
    assert body[0][:2] == ["csma-ca", "2"]
    assert body[4][:2] == ["csma-ca", "3"]
    assert body[8][:2] == ["csma-eca", "2"]
    assert (out / ECHO_NAME).exists()
    assert len(results.rows) == 8
    assert results.fault is None


def test_aggregates_match_a_direct_recomputation(tmp_path):
    spec = _tiny_spec(tmp_path)
    results = run_sweep(spec, workers=1)
    for (label, n), agg in results.aggregates.items():
        cell = [r for r in results.rows
                if r.label == label and r.n_nodes == n]
        assert len(cell) == 2
        for col in METRIC_COLUMNS:
            samples = [float(r.values[col]) for r in cell]
            assert agg["mean"][col] == statistics.fmean(samples)
            assert agg["stddev"][col] == statistics.stdev(samples)


def test_single_seed_stddev_is_zero(tmp_path):
    spec = _tiny_spec(tmp_path, seeds=[1])
    results = run_sweep(spec, workers=1)
    for agg in results.aggregates.values():
        assert all(v == 0.0 for v in agg["stddev"].values())


def test_reruns_are_byte_identical(tmp_path):
    spec = _tiny_spec(tmp_path)
    run_sweep(spec, workers=1)
    first = (tmp_path / "out" / RESULTS_NAME).read_bytes()
    spec2 = _tiny_spec(tmp_path)
    spec2.output_dir = str(tmp_path / "out2")
    run_sweep(spec2, workers=1)
    second = (tmp_path / "out2" / RESULTS_NAME).read_bytes()
    assert first == second


def test_worker_pool_size_does_not_change_the_bytes(tmp_path):
    spec = _tiny_spec(tmp_path)
    run_sweep(spec, workers=1)
    one = (tmp_path / "out" / RESULTS_NAME).read_bytes()
    spec2 = _tiny_spec(tmp_path)
    spec2.output_dir = str(tmp_path / "pool")
    run_sweep(spec2, workers=2)
    two = (tmp_path / "pool" / RESULTS_NAME).read_bytes()
    assert one == two


def test_worker_count_resolution(monkeypatch):
    assert worker_count(2) == 2
    monkeypatch.setenv(sweep_mod.WORKERS_ENV, "3")
    assert worker_count() == 3
    assert worker_count(1) == 1  # explicit request beats the environment
    monkeypatch.setenv(sweep_mod.WORKERS_ENV, "x")
    with pytest.raises(ConfigError):
        worker_count()
    with pytest.raises(ConfigError):
        worker_count(0)
    monkeypatch.delenv(sweep_mod.WORKERS_ENV)
    assert worker_count() >= 1


def test_fault_writes_partial_results_and_reraises(tmp_path, monkeypatch):
    spec = _tiny_spec(tmp_path, seeds=[1])
    real = sweep_mod.run_simulation

    def sabotaged(cfg):
        if cfg.protocol is Protocol.CSMA_CA and cfg.n_nodes == 3:
            raise ConsistencyError("planted fault")
        return real(cfg)

    monkeypatch.setattr(sweep_mod, "run_simulation", sabotaged)
    with pytest.raises(ConsistencyError, match="planted fault"):
        run_sweep(spec, workers=1)
    rows = _read_rows(tmp_path / "out" / RESULTS_NAME)
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 3  # header, the one finished run, the marker
    assert rows[1][:3] == ["csma-ca", "2", "1"]
    assert rows[2][0] == FAULT_MARKER
    assert rows[2][1].startswith("csma-ca,3,1:")
    assert len(rows[2]) == len(CSV_COLUMNS)


def test_cell_lookup(tmp_path):
    spec = _tiny_spec(tmp_path)
    results = run_sweep(spec, workers=1)
    row = results.cell("csma-eca", 3, 2)
    assert (row.label, row.n_nodes, row.seed) == ("csma-eca", 3, 2)
    with pytest.raises(KeyError):
        results.cell("csma-eca", 3, 99)


# -- loading results back -----------------------------------------------------

def test_load_results_round_trips_aggregates(tmp_path):
    spec = _tiny_spec(tmp_path)
    results = run_sweep(spec, workers=1)
    table = load_results(tmp_path / "out" / RESULTS_NAME)
    assert table.labels == ["csma-ca", "csma-eca"]
    assert table.node_counts == [2, 3]
    for key, agg in results.aggregates.items():
        for col in METRIC_COLUMNS:
            assert table.mean[key][col] == agg["mean"][col]
            assert table.stddev[key][col] == agg["stddev"][col]
    assert table.meta is not None
    assert table.meta.base.arrival_rate == 2000.0


def test_load_results_rejects_a_fault_marker(tmp_path, monkeypatch):
    spec = _tiny_spec(tmp_path, seeds=[1])

    def explode(cfg):
        raise ConsistencyError("dead on arrival")

    monkeypatch.setattr(sweep_mod, "run_simulation", explode)
    with pytest.raises(ConsistencyError):
        run_sweep(spec, workers=1)
    with pytest.raises(ConfigError, match="fault marker"):
        load_results(tmp_path / "out" / RESULTS_NAME)


def test_load_results_rejects_a_foreign_header(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("wrong,header\n1,2\n")
    with pytest.raises(ConfigError, match="unexpected results header"):
        load_results(path)


def test_load_results_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read results file"):
        load_results(tmp_path / "nope.csv")
