"""Shared loaders for CLI commands: suites, problems and devices."""

import json
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from qwalk.core.config import settings
from qwalk.core.exceptions import ConfigException, ParseException
from qwalk.core.logging import get_logger
from qwalk.models.circuit import PauliHamiltonian
from qwalk.models.device import DeviceSnapshot
from qwalk.models.experiment import BenchmarkSpec, ExperimentSuite
from qwalk.models.run import Problem
from qwalk.services.circuit_service import (
    efficient_su2,
    graph_family,
    load_graph,
    load_hamiltonian,
    measure_all,
    qaoa_maxcut,
    random_connected_graph,
)
from qwalk.services.device_service import load_device

logger = get_logger(__name__)


def load_suite(path: Union[str, Path]) -> ExperimentSuite:
    """
    Load and validate an experiment suite file.

    Raises:
        ConfigException: If the file is missing, not JSON, or invalid
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigException(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigException(f"Malformed config file {path}: {e}")

    try:
        return ExperimentSuite.model_validate(raw)
    except ValidationError as e:
        err = e.errors()[0]
        loc = ".".join(str(part) for part in err.get("loc", ()))
        raise ConfigException(f"Invalid config {path}: {loc or 'suite'}: {err.get('msg')}")


def _bundled_or_path(ref: str, folder: str, base_dir: Optional[Path]) -> Path:
    bundled = settings.resolved_data_dir() / folder / f"{ref}.txt"
    if bundled.exists():
        return bundled
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return path


def resolve_hamiltonian(ref: str, base_dir: Optional[Path] = None) -> PauliHamiltonian:
    """A bundled Hamiltonian name ("h2", "zz") or a file path."""
    return load_hamiltonian(_bundled_or_path(ref, "hamiltonians", base_dir))


def build_problem(benchmark: BenchmarkSpec, base_dir: Optional[Path] = None) -> Problem:
    """Ansatz with measurements, observable and (for QAOA) graph edges."""
    if benchmark.kind == "vqe":
        hamiltonian = resolve_hamiltonian(benchmark.hamiltonian, base_dir)
        circuit = measure_all(efficient_su2(hamiltonian.n, benchmark.reps))
        return Problem(name=benchmark.label, kind="vqe", circuit=circuit, hamiltonian=hamiltonian)

    if benchmark.graph is not None:
        graph = load_graph(_bundled_or_path(benchmark.graph, "graphs", base_dir))
    elif benchmark.family is not None:
        graph = graph_family(benchmark.family, benchmark.n)
    else:
        graph = random_connected_graph(benchmark.n, benchmark.m, benchmark.graph_seed)
    if graph.number_of_nodes() == 0:
        raise ParseException(f"Graph '{benchmark.label}' has no vertices")

    circuit, hamiltonian = qaoa_maxcut(graph)
    edges = tuple((u, v, float(data.get("weight", 1.0))) for u, v, data in sorted(graph.edges(data=True)))
    return Problem(
        name=benchmark.label, kind="qaoa", circuit=measure_all(circuit), hamiltonian=hamiltonian, edges=edges,
    )


def resolve_devices(refs: list[str], base_dir: Optional[Path] = None) -> list[DeviceSnapshot]:
    """Load every device reference, in order."""
    return [load_device(ref, base_dir) for ref in refs]
