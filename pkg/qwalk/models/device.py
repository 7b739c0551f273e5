"""Pydantic models for device snapshots and synthetic device specs."""

from typing import Literal, Optional

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator


class QubitProps(BaseModel):
    """Per-qubit calibration data."""

    model_config = ConfigDict(frozen=True)

    t1_us: float = Field(..., gt=0)
    t2_us: float = Field(..., gt=0)
    readout_error: float = Field(..., ge=0, lt=1)
    sq_error: float = Field(..., ge=0, lt=1)
    sq_duration_us: float = Field(..., gt=0)


class EdgeProps(BaseModel):
    """Per-edge two-qubit gate calibration data (symmetric)."""

    model_config = ConfigDict(frozen=True)

    u: int = Field(..., ge=0)
    v: int = Field(..., ge=0)
    tq_error: float = Field(..., ge=0, lt=1)
    tq_duration_us: float = Field(..., gt=0)


def edge_key(u: int, v: int) -> tuple[int, int]:
    """Canonical key of an undirected edge."""
    return (u, v) if u < v else (v, u)


class DeviceSnapshot(BaseModel):
    """Immutable device model: coupling graph plus calibration data.

    Field names follow the on-disk snapshot schema, so a snapshot file
    validates straight into this model.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    num_qubits: int = Field(..., ge=1)
    calibration_date: str = ""
    edges: list[tuple[int, int]] = Field(default_factory=list)
    qubits: list[QubitProps]
    edge_props: list[EdgeProps] = Field(default_factory=list)

    _graph: Optional[nx.Graph] = PrivateAttr(default=None)
    _edge_index: Optional[dict[tuple[int, int], EdgeProps]] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def check_invariants(self) -> "DeviceSnapshot":
        if len(self.qubits) != self.num_qubits:
            raise ValueError(
                f"qubits: expected {self.num_qubits} entries, got {len(self.qubits)}"
            )

        seen: set[tuple[int, int]] = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"edges: self-loop on qubit {u}")
            if not (0 <= u < self.num_qubits and 0 <= v < self.num_qubits):
                raise ValueError(f"edges: ({u}, {v}) references a qubit >= {self.num_qubits}")
            key = edge_key(u, v)
            if key in seen:
                raise ValueError(f"edges: duplicate edge {key}")
            seen.add(key)

        props: set[tuple[int, int]] = set()
        for p in self.edge_props:
            key = edge_key(p.u, p.v)
            if key in props:
                raise ValueError(f"edge_props: duplicate entry for edge {key}")
            props.add(key)
        missing = seen - props
        if missing:
            raise ValueError(f"edge_props: missing for edges {sorted(missing)}")
        extra = props - seen
        if extra:
            raise ValueError(f"edge_props: given for unknown edges {sorted(extra)}")
        return self

    @property
    def Q(self) -> int:
        return self.num_qubits

    def edge_set(self) -> set[tuple[int, int]]:
        return {edge_key(u, v) for u, v in self.edges}

    def edge(self, u: int, v: int) -> Optional[EdgeProps]:
        """Edge properties of (u, v), or None when the pair is not coupled."""
        if self._edge_index is None:
            self._edge_index = {edge_key(p.u, p.v): p for p in self.edge_props}
        return self._edge_index.get(edge_key(u, v))

    def graph(self) -> nx.Graph:
        """Coupling graph over all qubits (cached, must not be mutated)."""
        if self._graph is None:
            g = nx.Graph()
            g.add_nodes_from(range(self.num_qubits))
            g.add_edges_from(self.edges)
            self._graph = g
        return self._graph

    def mean_errors(self) -> tuple[float, float, float]:
        """Device-uniform (1q error, 2q error, readout error) means."""
        sq = sum(q.sq_error for q in self.qubits) / self.num_qubits
        ro = sum(q.readout_error for q in self.qubits) / self.num_qubits
        tq = (
            sum(p.tq_error for p in self.edge_props) / len(self.edge_props)
            if self.edge_props else 0.0
        )
        return sq, tq, ro


Range = tuple[float, float]


class NoiseProfile(BaseModel):
    """Ranges and correlation for synthetic calibration data."""

    seed: int = 0
    sq_error_range: Range = (1e-4, 1e-3)
    tq_error_range: Range = (5e-3, 3e-2)
    readout_range: Range = (5e-3, 4e-2)
    t1_range_us: Range = (80.0, 300.0)
    t2_range_us: Range = (40.0, 250.0)
    sq_duration_us: float = Field(default=0.035, gt=0)
    tq_duration_us: float = Field(default=0.5, gt=0)
    spatial_correlation: float = Field(default=0.0, ge=0, le=1)

    @model_validator(mode="after")
    def check_ranges(self) -> "NoiseProfile":
        for name in ("sq_error_range", "tq_error_range", "readout_range"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi < 1):
                raise ValueError(f"{name}: need 0 <= lo <= hi < 1, got ({lo}, {hi})")
        for name in ("t1_range_us", "t2_range_us"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name}: need 0 < lo <= hi, got ({lo}, {hi})")
        return self


TopologyKind = Literal[
    "edge-list", "heavy-hex-27", "heavy-hex-127", "heavy-hex-lattice", "path", "ring"
]


class Topology(BaseModel):
    """Coupling topology of a synthetic device."""

    kind: TopologyKind
    num_qubits: Optional[int] = Field(default=None, ge=1)
    path: Optional[str] = None
    rows: Optional[int] = Field(default=None, ge=1)
    width: Optional[int] = Field(default=None, ge=2)

    @model_validator(mode="after")
    def check_arguments(self) -> "Topology":
        if self.kind in ("path", "ring") and self.num_qubits is None:
            raise ValueError(f"{self.kind} topology needs num_qubits")
        if self.kind == "ring" and self.num_qubits is not None and self.num_qubits < 3:
            raise ValueError("ring topology needs at least 3 qubits")
        if self.kind == "edge-list" and not self.path:
            raise ValueError("edge-list topology needs a path")
        if self.kind == "heavy-hex-lattice" and (self.rows is None or self.width is None):
            raise ValueError("heavy-hex-lattice topology needs rows and width")
        return self


class SyntheticDeviceSpec(BaseModel):
    """Recipe for a deterministic synthetic device."""

    name: Optional[str] = None
    topology: Topology
    noise_profile: NoiseProfile = Field(default_factory=NoiseProfile)
