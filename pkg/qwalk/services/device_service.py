"""Device service: load, validate, save and synthesize device snapshots."""

import json
import math
from pathlib import Path
from typing import Optional, Union

import networkx as nx
import numpy as np
from pydantic import ValidationError
from scipy.sparse.csgraph import shortest_path

from qwalk.core.config import settings
from qwalk.core.exceptions import (
    InvalidSpecException,
    ParseException,
    QubitIndexError,
    ValidationException,
)
from qwalk.core.logging import get_logger
from qwalk.models.device import (
    DeviceSnapshot,
    EdgeProps,
    NoiseProfile,
    QubitProps,
    SyntheticDeviceSpec,
    Topology,
    edge_key,
)

logger = get_logger(__name__)

DISCONNECTED = math.inf
SYNTHETIC_DATE = "2025-01-01T00:00:00Z"

PRESET_FILES = {
    "heavy-hex-27": "heavy_hex_27.txt",
    "heavy-hex-127": "heavy_hex_127.txt",
}


def _validation_message(exc: ValidationError) -> tuple[str, str]:
    """Flatten the first pydantic error into (field, message)."""
    err = exc.errors()[0]
    loc = [str(part) for part in err.get("loc", ())]
    field = next((part for part in reversed(loc) if not part.isdigit()), "")
    message = err.get("msg", str(exc))
    # Model-level checks prefix their message with the field name
    if not field and ":" in message:
        field = message.split(":", 1)[0].replace("Value error, ", "").strip()
    return field, f"{'.'.join(loc) or 'snapshot'}: {message}"


def load_snapshot(path: Union[str, Path]) -> DeviceSnapshot:
    """
    Load and validate a device snapshot JSON file.

    Raises:
        ParseException: If the file is missing or not valid JSON
        ValidationException: If an invariant is violated (names the field)
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ParseException(f"Snapshot file not found: {path}")
    except json.JSONDecodeError as e:
        raise ParseException(f"Malformed snapshot file {path}: {e}")

    try:
        snapshot = DeviceSnapshot.model_validate(raw)
    except ValidationError as e:
        field, message = _validation_message(e)
        raise ValidationException(f"Invalid snapshot {path}: {message}", field=field)

    logger.info(f"Loaded snapshot '{snapshot.name}' ({snapshot.num_qubits} qubits, {len(snapshot.edges)} edges)")
    return snapshot


def save_snapshot(snapshot: DeviceSnapshot, path: Union[str, Path]) -> None:
    """Write a snapshot in the on-disk JSON schema."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(snapshot.model_dump_json(indent=2))
        f.write("\n")


def load_edge_list(path: Union[str, Path]) -> list[tuple[int, int]]:
    """Parse a whitespace-separated "u v" edge list with '#' comments."""
    path = Path(path)
    edges = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ParseException(f"Edge-list file not found: {path}")

    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseException(f"{path}:{lineno}: expected 'u v', got '{line}'")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseException(f"{path}:{lineno}: qubit indices must be integers")
    return edges


def heavy_hex_lattice_edges(rows: int, width: int) -> tuple[int, list[tuple[int, int]]]:
    """
    Heavy-hex-like lattice: `rows` chains of `width` qubits joined by
    bridge qubits every fourth column, alternating column offsets 0 and 2.

    Returns:
        (qubit count, edge list)
    """
    edges = []
    row_start = []
    next_index = 0
    for _ in range(rows):
        row_start.append(next_index)
        next_index += width

    for r in range(rows):
        start = row_start[r]
        edges.extend((start + c, start + c + 1) for c in range(width - 1))

    for r in range(rows - 1):
        offset = 0 if r % 2 == 0 else 2
        for c in range(offset, width, 4):
            bridge = next_index
            next_index += 1
            edges.append((row_start[r] + c, bridge))
            edges.append((bridge, row_start[r + 1] + c))
    return next_index, edges


def _topology_edges(topology: Topology) -> tuple[int, list[tuple[int, int]]]:
    if topology.kind == "path":
        n = topology.num_qubits
        return n, [(i, i + 1) for i in range(n - 1)]
    if topology.kind == "ring":
        n = topology.num_qubits
        return n, [(i, (i + 1) % n) for i in range(n)]
    if topology.kind == "heavy-hex-lattice":
        return heavy_hex_lattice_edges(topology.rows, topology.width)

    if topology.kind == "edge-list":
        edges = load_edge_list(topology.path)
    else:
        edges = load_edge_list(settings.resolved_data_dir() / "devices" / PRESET_FILES[topology.kind])
    n = topology.num_qubits or (1 + max(max(e) for e in edges) if edges else 1)
    return n, edges


def _hop_matrix(graph: nx.Graph) -> np.ndarray:
    nodes = list(graph.nodes)
    if not nodes:
        return np.zeros((0, 0))
    adjacency = nx.to_scipy_sparse_array(graph, nodelist=nodes)
    return shortest_path(adjacency, unweighted=True, directed=False)


def _field(rng: np.random.Generator, hops: np.ndarray, correlation: float) -> np.ndarray:
    """
    Values in [0, 1] over graph elements; correlation blends independent
    draws with a Gaussian-kernel smoothing over hop distance.
    """
    raw = rng.random(hops.shape[0])
    if correlation == 0 or hops.shape[0] == 0:
        return raw
    finite = hops[np.isfinite(hops)]
    diameter = float(finite.max()) if finite.size else 0.0
    length = correlation * max(2.0, diameter / 2)
    weights = np.where(np.isfinite(hops), np.exp(-(hops ** 2) / (2 * length ** 2)), 0.0)
    smooth = weights @ raw / weights.sum(axis=1)
    return (1 - correlation) * raw + correlation * smooth


def _scale(values: np.ndarray, bounds: tuple[float, float]) -> np.ndarray:
    lo, hi = bounds
    return lo + values * (hi - lo)


def synthesize_device(spec: SyntheticDeviceSpec) -> DeviceSnapshot:
    """
    Build a deterministic synthetic device from a topology and noise profile.

    The result is a pure function of `spec`: the same seed reproduces the
    same snapshot byte for byte.

    Raises:
        InvalidSpecException: If the topology or ranges are invalid
    """
    try:
        num_qubits, raw_edges = _topology_edges(spec.topology)
    except ParseException as e:
        raise InvalidSpecException(f"Invalid topology: {e.message}", field="topology")

    edges = sorted({edge_key(u, v) for u, v in raw_edges})
    if any(v >= num_qubits for _, v in edges):
        raise InvalidSpecException("Topology references qubits beyond num_qubits", field="topology")

    noise: NoiseProfile = spec.noise_profile
    rng = np.random.default_rng(noise.seed)
    rho = noise.spatial_correlation

    graph = nx.Graph()
    graph.add_nodes_from(range(num_qubits))
    graph.add_edges_from(edges)
    qubit_hops = _hop_matrix(graph)

    # Edge adjacency: two couplers are neighbors when they share a qubit
    line = nx.Graph()
    line.add_nodes_from(edges)
    for q in graph.nodes:
        incident = sorted(edge_key(q, nb) for nb in graph.neighbors(q))
        line.add_edges_from(
            (a, b) for i, a in enumerate(incident) for b in incident[i + 1:]
        )
    edge_hops = _hop_matrix(line) if edges else np.zeros((0, 0))

    sq = _scale(_field(rng, qubit_hops, rho), noise.sq_error_range)
    ro = _scale(_field(rng, qubit_hops, rho), noise.readout_range)
    t1 = _scale(_field(rng, qubit_hops, rho), noise.t1_range_us)
    t2 = _scale(_field(rng, qubit_hops, rho), noise.t2_range_us)
    # Physical bound T2 <= 2 T1
    t2 = np.minimum(t2, 2 * t1)
    tq = _scale(_field(rng, edge_hops, rho), noise.tq_error_range) if edges else np.zeros(0)

    qubits = [
        QubitProps(
            t1_us=float(t1[q]),
            t2_us=float(t2[q]),
            readout_error=float(ro[q]),
            sq_error=float(sq[q]),
            sq_duration_us=noise.sq_duration_us,
        )
        for q in range(num_qubits)
    ]
    edge_props = [
        EdgeProps(u=u, v=v, tq_error=float(tq[i]), tq_duration_us=noise.tq_duration_us)
        for i, (u, v) in enumerate(edges)
    ]

    name = spec.name or f"synthetic-{spec.topology.kind}-{num_qubits}-s{noise.seed}"
    logger.info(f"Synthesized device '{name}' ({num_qubits} qubits, correlation={rho})")
    return DeviceSnapshot(
        name=name,
        num_qubits=num_qubits,
        calibration_date=SYNTHETIC_DATE,
        edges=edges,
        qubits=qubits,
        edge_props=edge_props,
    )


def coupling_distance(snapshot: DeviceSnapshot, u: int, v: int) -> float:
    """
    Shortest-path hop count between two physical qubits.

    Returns:
        Hop count, or DISCONNECTED (inf) when no path exists

    Raises:
        QubitIndexError: If u or v is not a qubit of the device
    """
    for q in (u, v):
        if not 0 <= q < snapshot.num_qubits:
            raise QubitIndexError(f"Qubit {q} outside device of {snapshot.num_qubits} qubits")
    try:
        return nx.shortest_path_length(snapshot.graph(), u, v)
    except nx.NetworkXNoPath:
        return DISCONNECTED


def parse_synthetic_ref(ref: str) -> SyntheticDeviceSpec:
    """
    Parse "synthetic:<topology>[:key=value,...]".

    Keys: seed, correlation, n (path/ring size), rows, width.
    Example: "synthetic:heavy-hex-27:seed=7,correlation=0.5".
    """
    parts = ref.split(":", 2)
    if len(parts) < 2 or parts[0] != "synthetic":
        raise InvalidSpecException(f"Not a synthetic device reference: '{ref}'")

    options: dict[str, str] = {}
    if len(parts) == 3 and parts[2]:
        for item in parts[2].split(","):
            key, _, value = item.partition("=")
            options[key.strip()] = value.strip()

    try:
        topology = Topology(
            kind=parts[1],
            num_qubits=int(options["n"]) if "n" in options else None,
            rows=int(options["rows"]) if "rows" in options else None,
            width=int(options["width"]) if "width" in options else None,
        )
        noise = NoiseProfile(
            seed=int(options.get("seed", 0)),
            spatial_correlation=float(options.get("correlation", 0.0)),
        )
    except (ValidationError, ValueError) as e:
        raise InvalidSpecException(f"Invalid synthetic device '{ref}': {e}")
    return SyntheticDeviceSpec(topology=topology, noise_profile=noise)


def load_device(ref: str, base_dir: Optional[Path] = None) -> DeviceSnapshot:
    """
    Resolve a device reference: a bundled name ("line5"), a synthetic spec
    string, or a snapshot file path (relative to `base_dir` when given).
    """
    if ref.startswith("synthetic:"):
        return synthesize_device(parse_synthetic_ref(ref))

    bundled = settings.resolved_data_dir() / "devices" / f"{ref}.json"
    if bundled.exists():
        return load_snapshot(bundled)

    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return load_snapshot(path)
