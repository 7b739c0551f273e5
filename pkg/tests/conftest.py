"""Shared fixtures: the line5 device, small circuits and problems."""

import pytest

from qwalk.models.circuit import Gate, ParamCircuit, PauliHamiltonian
from qwalk.models.device import NoiseProfile, SyntheticDeviceSpec, Topology
from qwalk.models.run import Problem, TechniqueConfig
from qwalk.services.circuit_service import efficient_su2, measure_all
from qwalk.services.device_service import load_device, synthesize_device


@pytest.fixture
def line5():
    return load_device("line5")


@pytest.fixture
def single_cx():
    """Two-qubit circuit holding one CX."""
    return ParamCircuit(n=2, gates=(Gate(op="CX", qubits=(0, 1)),))


@pytest.fixture
def homogeneous5():
    noise = NoiseProfile(
        seed=3,
        sq_error_range=(1e-3, 1e-3),
        tq_error_range=(1e-2, 1e-2),
        readout_range=(2e-2, 2e-2),
        t1_range_us=(100.0, 100.0),
        t2_range_us=(80.0, 80.0),
    )
    return synthesize_device(SyntheticDeviceSpec(topology=Topology(kind="path", num_qubits=5), noise_profile=noise))


@pytest.fixture
def zz_problem():
    hamiltonian = PauliHamiltonian.from_pairs([(1.0, "ZZ")])
    return Problem(name="zz", circuit=measure_all(efficient_su2(2, 1)), hamiltonian=hamiltonian)


@pytest.fixture
def small_cfg():
    """Short budget so runner tests stay fast."""
    return TechniqueConfig(cycles=3, iters_per_cycle=8, shots=128, max_evals=24)
