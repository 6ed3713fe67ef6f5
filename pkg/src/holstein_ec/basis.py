"""One-particle x multi-oscillator Fock basis.

A basis state is ``(particle_site, occupations)``.  Indices are mixed-radix
numbers with the particle site as the most significant digit followed by the
phonon occupations in site order, each in base ``phonon_levels``.  A state
vector therefore reshapes (C order) into an array of shape
``(num_sites, phonon_levels, ..., phonon_levels)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

INDEX_MAX = 2**63 - 1


class BasisError(ValueError):
    """Invalid basis configuration or out-of-range state/index."""


def basis_size(num_sites: int, phonon_levels: int) -> int:
    """Return ``num_sites * phonon_levels**num_sites``.

    Raises :class:`BasisError` if the result does not fit a signed 64-bit index.
    """
    if num_sites < 1 or phonon_levels < 1:
        raise BasisError(
            f"num_sites and phonon_levels must be >= 1, got {num_sites}, {phonon_levels}"
        )
    size = num_sites * phonon_levels**num_sites  # exact python int
    if size > INDEX_MAX:
        raise BasisError(
            f"basis of {num_sites} sites x {phonon_levels} levels has {size} states; "
            "exceeds the 64-bit index range"
        )
    return size


@dataclass(frozen=True)
class BasisConfig:
    num_sites: int
    phonon_levels: int

    def __post_init__(self) -> None:
        # validates and rejects overflow
        basis_size(self.num_sites, self.phonon_levels)

    @property
    def dimension(self) -> int:
        return self.num_sites * self.phonon_levels**self.num_sites

    @property
    def phonon_dimension(self) -> int:
        return self.phonon_levels**self.num_sites

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return (self.num_sites,) + (self.phonon_levels,) * self.num_sites

    def states(self) -> Iterator["BasisState"]:
        for i in range(self.dimension):
            yield state_of(i, self)


@dataclass(frozen=True)
class BasisState:
    particle_site: int
    occupations: tuple[int, ...]

    def __init__(self, particle_site: int, occupations: Sequence[int]):
        object.__setattr__(self, "particle_site", int(particle_site))
        object.__setattr__(self, "occupations", tuple(int(n) for n in occupations))


def _check_state(state: BasisState, config: BasisConfig) -> None:
    if not 0 <= state.particle_site < config.num_sites:
        raise BasisError(f"particle_site {state.particle_site} outside [0, {config.num_sites})")
    if len(state.occupations) != config.num_sites:
        raise BasisError(
            f"expected {config.num_sites} occupations, got {len(state.occupations)}"
        )
    for n in state.occupations:
        if not 0 <= n < config.phonon_levels:
            raise BasisError(f"occupation {n} outside [0, {config.phonon_levels})")


def index_of(state: BasisState, config: BasisConfig) -> int:
    _check_state(state, config)
    index = state.particle_site
    for n in state.occupations:
        index = index * config.phonon_levels + n
    return index


def state_of(index: int, config: BasisConfig) -> BasisState:
    if not 0 <= index < config.dimension:
        raise BasisError(f"index {index} outside [0, {config.dimension})")
    occupations = []
    rest = int(index)
    for _ in range(config.num_sites):
        rest, n = divmod(rest, config.phonon_levels)
        occupations.append(n)
    return BasisState(rest, occupations[::-1])


def occupation_table(num_sites: int, phonon_levels: int) -> np.ndarray:
    """Occupations of every phonon configuration, shape ``(N_p**N_s, N_s)``.

    Row ``r`` holds the digits of ``r`` in base ``phonon_levels``, most
    significant first, matching the phonon part of :func:`index_of`.
    """
    basis_size(num_sites, phonon_levels)
    grids = np.indices((phonon_levels,) * num_sites, dtype=np.int64)
    return grids.reshape(num_sites, -1).T.copy()
