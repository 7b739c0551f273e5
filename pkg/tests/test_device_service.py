import itertools
import json
import math
import time

import networkx as nx
import numpy as np
import pytest

from qwalk.core.exceptions import InvalidSpecException, ParseException, ValidationException
from qwalk.models.device import NoiseProfile, SyntheticDeviceSpec, Topology
from qwalk.services.circuit_service import efficient_su2
from qwalk.services.device_service import (
    coupling_distance,
    heavy_hex_lattice_edges,
    load_device,
    load_edge_list,
    load_snapshot,
    parse_synthetic_ref,
    save_snapshot,
    synthesize_device,
)
from qwalk.services.fidelity_service import EspScorer
from qwalk.services.mapping_service import enumerate_seed_maps, walk_step


def _snapshot_dict(**overrides):
    raw = {
        "name": "pair",
        "num_qubits": 2,
        "edges": [[0, 1]],
        "qubits": [
            {"t1_us": 100.0, "t2_us": 80.0, "readout_error": 0.02, "sq_error": 0.001, "sq_duration_us": 0.035},
            {"t1_us": 120.0, "t2_us": 90.0, "readout_error": 0.03, "sq_error": 0.001, "sq_duration_us": 0.035},
        ],
        "edge_props": [{"u": 0, "v": 1, "tq_error": 0.01, "tq_duration_us": 0.5}],
    }
    raw.update(overrides)
    return raw


def test_line5_fixture_loads(line5):
    assert line5.Q == 5
    assert len(line5.edges) == 4
    assert line5.edge(2, 1).tq_error == pytest.approx(0.01)


def test_readout_error_out_of_range_names_field(tmp_path):
    raw = _snapshot_dict()
    raw["qubits"][0]["readout_error"] = 1.2
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(raw))

    with pytest.raises(ValidationException) as exc_info:
        load_snapshot(path)
    assert exc_info.value.field == "readout_error"
    assert exc_info.value.exit_code == 2


def test_disconnected_device_is_accepted(tmp_path):
    raw = _snapshot_dict(edges=[], edge_props=[])
    path = tmp_path / "split.json"
    path.write_text(json.dumps(raw))

    snapshot = load_snapshot(path)
    assert snapshot.num_qubits == 2
    assert coupling_distance(snapshot, 0, 1) == math.inf


def test_missing_edge_props_rejected(tmp_path):
    path = tmp_path / "missing.json"
    path.write_text(json.dumps(_snapshot_dict(edge_props=[])))
    with pytest.raises(ValidationException):
        load_snapshot(path)


def test_duplicate_edge_props_rejected(tmp_path):
    props = [
        {"u": 0, "v": 1, "tq_error": 0.01, "tq_duration_us": 0.5},
        {"u": 1, "v": 0, "tq_error": 0.02, "tq_duration_us": 0.5},
    ]
    path = tmp_path / "twice.json"
    path.write_text(json.dumps(_snapshot_dict(edge_props=props)))
    with pytest.raises(ValidationException) as exc_info:
        load_snapshot(path)
    assert exc_info.value.field == "edge_props"


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ParseException):
        load_snapshot(tmp_path / "nope.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ParseException):
        load_snapshot(broken)


def test_save_then_load_preserves_snapshot(tmp_path, line5):
    path = tmp_path / "line5.json"
    save_snapshot(line5, path)
    assert load_snapshot(path).model_dump() == line5.model_dump()


def test_synthesis_is_deterministic(tmp_path):
    spec = parse_synthetic_ref("synthetic:heavy-hex-27:seed=7")
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    save_snapshot(synthesize_device(spec), first)
    save_snapshot(synthesize_device(spec), second)
    assert first.read_bytes() == second.read_bytes()


def test_heavy_hex_27_preset_shape():
    snapshot = synthesize_device(parse_synthetic_ref("synthetic:heavy-hex-27:seed=1"))
    assert snapshot.num_qubits == 27
    assert len(snapshot.edges) == 28
    degrees = [d for _, d in snapshot.graph().degree()]
    assert max(degrees) <= 3


def test_collapsed_ranges_give_homogeneous_device(homogeneous5):
    assert all(q.sq_error == pytest.approx(1e-3) for q in homogeneous5.qubits)
    assert len({p.tq_error for p in homogeneous5.edge_props}) == 1


def _adjacent_edge_spread(snapshot):
    errors = {(p.u, p.v): p.tq_error for p in snapshot.edge_props}
    n = snapshot.num_qubits
    ring = [tuple(sorted((i, (i + 1) % n))) for i in range(n)]
    diffs = [abs(errors[ring[i]] - errors[ring[(i + 1) % n]]) for i in range(n)]
    return np.var(diffs) + np.mean(diffs) ** 2


def test_spatial_correlation_smooths_neighbouring_edges():
    def ring(correlation):
        noise = NoiseProfile(seed=5, spatial_correlation=correlation)
        return synthesize_device(SyntheticDeviceSpec(topology=Topology(kind="ring", num_qubits=8), noise_profile=noise))

    assert _adjacent_edge_spread(ring(1.0)) < _adjacent_edge_spread(ring(0.0))


def test_coupling_distance_on_line5(line5):
    assert coupling_distance(line5, 0, 4) == 4
    assert coupling_distance(line5, 2, 2) == 0


def test_heavy_hex_lattice_grows_linearly():
    small, _ = heavy_hex_lattice_edges(3, 9)
    large, edges = heavy_hex_lattice_edges(6, 9)
    assert large > small
    assert all(u != v for u, v in edges)


def test_load_edge_list(tmp_path):
    path = tmp_path / "edges.txt"
    path.write_text("# comment\n0 1\n1 2\n")
    assert load_edge_list(path) == [(0, 1), (1, 2)]

    path.write_text("0 1 2\n")
    with pytest.raises(ParseException):
        load_edge_list(path)


def test_bad_synthetic_reference():
    with pytest.raises(InvalidSpecException):
        parse_synthetic_ref("synthetic:moebius:seed=1")
    with pytest.raises(InvalidSpecException):
        parse_synthetic_ref("line5")


def test_load_device_resolves_relative_paths(tmp_path, line5):
    save_snapshot(line5, tmp_path / "copy.json")
    assert load_device("copy.json", base_dir=tmp_path).model_dump() == line5.model_dump()


def _edge_list_device(tmp_path, graph, name):
    path = tmp_path / f"{name}.txt"
    path.write_text("".join(f"{u} {v}\n" for u, v in graph.edges))
    topology = Topology(kind="edge-list", path=str(path), num_qubits=graph.number_of_nodes())
    return synthesize_device(SyntheticDeviceSpec(topology=topology))


def test_coupling_distance_is_a_metric_on_random_graphs(tmp_path):
    rng = np.random.default_rng(8)
    for index in range(20):
        n = int(rng.integers(3, 9))
        graph = nx.gnm_random_graph(n, int(rng.integers(1, n * (n - 1) // 2 + 1)), seed=index)
        snapshot = _edge_list_device(tmp_path, graph, f"g{index}")
        d = [[coupling_distance(snapshot, u, v) for v in range(n)] for u in range(n)]
        for u, v, w in itertools.product(range(n), repeat=3):
            assert (d[u][v] == 0) == (u == v)
            assert d[u][v] == d[v][u]
            assert d[u][w] <= d[u][v] + d[v][w]


def _time_mapping(snapshot, repeats=5):
    circuit = efficient_su2(4, 1)
    scorer = EspScorer(circuit, snapshot)
    samples = []
    for _ in range(repeats + 1):
        started = time.perf_counter()
        maps = enumerate_seed_maps(snapshot, 4)
        walk_step(maps[0], 0.5, circuit, snapshot, scorer=scorer)
        samples.append(time.perf_counter() - started)
    # First pass builds cached graphs
    return float(np.median(samples[1:]))


@pytest.mark.slow
def test_mapping_time_grows_linearly_with_device_size():
    sizes, seconds = [], []
    for rows, width in ((2, 12), (5, 21), (13, 32)):
        snapshot = synthesize_device(
            SyntheticDeviceSpec(topology=Topology(kind="heavy-hex-lattice", rows=rows, width=width))
        )
        sizes.append(snapshot.num_qubits)
        seconds.append(_time_mapping(snapshot))

    assert sizes == [27, 127, 512]
    slope, intercept = np.polyfit(sizes, seconds, 1)
    fitted = slope * np.asarray(sizes) + intercept
    residual = float(np.sum((np.asarray(seconds) - fitted) ** 2))
    total = float(np.sum((np.asarray(seconds) - np.mean(seconds)) ** 2))
    assert slope > 0
    assert 1 - residual / total >= 0.9
