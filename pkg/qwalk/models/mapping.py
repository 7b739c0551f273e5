"""Pydantic models for circuit maps and multi-programming zones."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CircuitMap(BaseModel):
    """Injective logical -> physical qubit assignment."""

    model_config = ConfigDict(frozen=True)

    assignment: tuple[int, ...]

    @model_validator(mode="after")
    def check_injective(self) -> "CircuitMap":
        if not self.assignment:
            raise ValueError("a map assigns at least one qubit")
        if len(set(self.assignment)) != len(self.assignment):
            raise ValueError(f"assignment {self.assignment} is not injective")
        if min(self.assignment) < 0:
            raise ValueError("physical qubit indices are non-negative")
        return self

    @property
    def physical_set(self) -> frozenset[int]:
        return frozenset(self.assignment)

    @property
    def sorted_key(self) -> tuple[int, ...]:
        """Lexicographic tie-break key: the sorted physical set."""
        return tuple(sorted(self.assignment))

    def __len__(self) -> int:
        return len(self.assignment)

    def __str__(self) -> str:
        return "{" + ",".join(str(q) for q in self.sorted_key) + "}"


class ScoredMap(BaseModel):
    """A candidate map with its ESP."""

    model_config = ConfigDict(frozen=True)

    map: CircuitMap
    esp: float = Field(..., gt=0, le=1)


class Zone(BaseModel):
    """Qubits claimed by one job on a shared device."""

    owner: str
    claimed: frozenset[int]
    initial_map: Optional[CircuitMap] = None
