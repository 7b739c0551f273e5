"""Inspection commands: schedules, oracles, maps, map scoring, device synthesis."""

import argparse
import sys
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from qwalk.cli.dependencies import resolve_hamiltonian
from qwalk.core.exceptions import ConfigException, ValidationException
from qwalk.core.logging import get_logger
from qwalk.models.circuit import ParamCircuit
from qwalk.models.mapping import CircuitMap
from qwalk.models.schedule import EspSchedule
from qwalk.services import metrics_service
from qwalk.services.circuit_service import efficient_su2, load_graph, measure_all
from qwalk.services.device_service import load_device, parse_synthetic_ref, save_snapshot, synthesize_device
from qwalk.services.fidelity_service import EspScorer
from qwalk.services.mapping_service import enumerate_seed_maps, validate_map
from qwalk.services.schedule_service import schedule_table
from qwalk.services.simulator_service import exact_ground_energy

logger = get_logger(__name__)


def cmd_schedules(args: argparse.Namespace) -> int:
    """Print the (t, sigma) table of one schedule as CSV."""
    try:
        schedule = EspSchedule(
            kind=args.kind,
            sigma_min=args.sigma_min,
            sigma_max=args.sigma_max,
            T=args.T,
            alpha=args.alpha,
            beta=args.beta,
            gamma=args.gamma,
        )
    except ValidationError as e:
        err = e.errors()[0]
        raise ConfigException(f"Invalid schedule: {err.get('msg')}")
    schedule_table(schedule).to_csv(sys.stdout, index=False)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    """Print the exact ground energy of a Hamiltonian or the maximum cut of a graph."""
    if args.graph:
        graph = load_graph(args.graph)
        edges = [(u, v, float(d.get("weight", 1.0))) for u, v, d in sorted(graph.edges(data=True))]
        value = metrics_service.brute_force_max_cut(edges)
    else:
        value = exact_ground_energy(resolve_hamiltonian(args.hamiltonian))
    print(f"{value:.12g}")
    return 0


def _circuit(args: argparse.Namespace) -> ParamCircuit:
    return measure_all(efficient_su2(args.qubits, args.reps))


def cmd_maps(args: argparse.Namespace) -> int:
    """List seed maps of an EfficientSU2 circuit on a device, best ESP first."""
    device = load_device(args.device)
    circuit = _circuit(args)
    exclude = frozenset(int(q) for q in args.exclude.split(",")) if args.exclude else frozenset()
    scorer = EspScorer(circuit, device)

    rows = []
    for m in enumerate_seed_maps(device, circuit.n, exclude):
        rows.append({"map": str(m), "assignment": " ".join(map(str, m.assignment)), "esp": scorer.esp(m), "depth": scorer.depth(m)})
    frame = pd.DataFrame(rows).sort_values(["esp", "map"], ascending=[False, True], kind="mergesort")
    frame.to_csv(sys.stdout, index=False)
    return 0


def cmd_score_map(args: argparse.Namespace) -> int:
    """Print the ESP of one map, given as a comma-separated assignment."""
    device = load_device(args.device)
    try:
        circuit_map = CircuitMap(assignment=tuple(int(q) for q in args.map.split(",")))
    except (ValueError, ValidationError) as e:
        raise ValidationException(f"Invalid map '{args.map}': {e}", field="map")
    circuit = _circuit(args)
    if len(circuit_map) != circuit.n:
        raise ValidationException(f"map has {len(circuit_map)} qubits, circuit {circuit.n}", field="map")
    validate_map(circuit_map, device)
    print(f"{EspScorer(circuit, device).esp(circuit_map):.12g}")
    return 0


def cmd_synthesize(args: argparse.Namespace) -> int:
    """Write a synthetic device snapshot."""
    spec = parse_synthetic_ref(args.ref)
    snapshot = synthesize_device(spec)
    save_snapshot(snapshot, Path(args.out))
    logger.info(f"Wrote synthetic device '{snapshot.name}' ({snapshot.num_qubits} qubits) to {args.out}")
    return 0
