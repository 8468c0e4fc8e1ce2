"""Discrete velocity space, Chu-reduced Maxwellians and macroscopic moments.

All quantities are SI. The reduced distributions are stored as two arrays
``g1`` (density) and ``g2`` (transverse energy) of shape ``(n_points, n_nodes)``
where the velocity nodes of a 2D grid are flattened row-major, node
``k * Nv + l`` sitting at ``(v_k, v_l)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOLTZMANN = 1.380649e-23


class AdmissibilityError(ValueError):
    """Raised when a density or temperature is not strictly positive."""

    def __init__(self, message: str, point: int | None = None,
                 quantity: str | None = None, value: float | None = None):
        super().__init__(message)
        self.point = point
        self.quantity = quantity
        self.value = value


def _check_positive(name: str, values, offset: int = 0) -> None:
    values = np.atleast_1d(values)
    bad = ~(values > 0.0)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise AdmissibilityError(
            f"non-positive {name}={values[idx]!r} at point {idx + offset}",
            point=idx + offset, quantity=name, value=float(values[idx]))


@dataclass(frozen=True)
class GasParameters:
    """Specific gas constant, relaxation time and molecular constants."""

    Rs: float
    tau: float
    kB: float = BOLTZMANN
    d: float = 3.68e-10

    def __post_init__(self):
        if not self.Rs > 0:
            raise ValueError(f"Rs must be positive, got {self.Rs}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not (self.kB > 0 and self.d > 0):
            raise ValueError("kB and d must be positive")


@dataclass(frozen=True)
class VelocityGrid:
    """Equispaced velocity nodes on ``[-vmax, vmax]^dim`` with midpoint weights."""

    dim: int
    Nv: int
    vmax: float
    axis: np.ndarray = field(init=False, repr=False, compare=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weight: float = field(init=False, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.Nv < 2:
            raise ValueError("Nv must be at least 2")
        if not self.vmax > 0:
            raise ValueError("vmax must be positive")
        k = np.arange(self.Nv)
        axis = -self.vmax + 2.0 * k * self.vmax / (self.Nv - 1)
        if self.dim == 1:
            nodes = axis[:, None].copy()
        else:
            v1, v2 = np.meshgrid(axis, axis, indexing="ij")
            nodes = np.stack([v1.ravel(), v2.ravel()], axis=1)
        axis.setflags(write=False)
        nodes.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weight", (2.0 * self.vmax / (self.Nv - 1)) ** self.dim)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def speed2(self) -> np.ndarray:
        return np.sum(self.nodes ** 2, axis=1)


@dataclass
class ChuField:
    """The reduced pair ``(g1, g2)``, one row per point, one column per node."""

    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        self.g1 = np.asarray(self.g1, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        if self.g1.shape != self.g2.shape:
            raise ValueError(f"g1 {self.g1.shape} and g2 {self.g2.shape} differ in shape")

    def copy(self) -> "ChuField":
        return ChuField(self.g1.copy(), self.g2.copy())


@dataclass
class Moments:
    rho: float
    U: np.ndarray
    T: float
    E: float | None = None

    def __post_init__(self):
        self.U = np.atleast_1d(np.asarray(self.U, dtype=float))


def maxwellian(rho, U, T, gas: GasParameters, grid: VelocityGrid,
               offset: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Reduced Maxwellians ``(G1, G2)`` for arrays of moments.

    ``rho`` and ``T`` have shape ``(n,)`` and ``U`` shape ``(n, dim)``; the
    result has shape ``(n, grid.size)``. In 1D ``G2 = 2 Rs T G1`` (two
    integrated transverse directions), in 2D ``G2 = Rs T G1``.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    U = np.asarray(U, dtype=float).reshape(rho.shape[0], grid.dim)
    _check_positive("rho", rho, offset)
    _check_positive("T", T, offset)
    RT = gas.Rs * T
    c2 = np.zeros((rho.shape[0], grid.size))
    for d in range(grid.dim):
        c2 += (grid.nodes[None, :, d] - U[:, d, None]) ** 2
    if grid.dim == 1:
        norm = rho / np.sqrt(2.0 * math.pi * RT)
        transverse = 2.0 * RT
    else:
        norm = rho / (2.0 * math.pi * RT)
        transverse = RT
    G1 = norm[:, None] * np.exp(-c2 / (2.0 * RT[:, None]))
    G2 = transverse[:, None] * G1
    return G1, G2


def maxwellian_1d(m: Moments, gas: GasParameters, grid: VelocityGrid):
    if grid.dim != 1:
        raise ValueError("maxwellian_1d needs a 1D velocity grid")
    G1, G2 = maxwellian([m.rho], m.U[None, :1], [m.T], gas, grid)
    return G1[0], G2[0]


def maxwellian_2d(m: Moments, gas: GasParameters, grid: VelocityGrid):
    if grid.dim != 2:
        raise ValueError("maxwellian_2d needs a 2D velocity grid")
    G1, G2 = maxwellian([m.rho], m.U[None, :2], [m.T], gas, grid)
    return G1[0], G2[0]


def field_moments(g1: np.ndarray, g2: np.ndarray, grid: VelocityGrid,
                  gas: GasParameters, check: bool = True, offset: int = 0):
    """Density, mean velocity, temperature and total energy at every point.

    The temperature follows from ``E = 3/2 rho Rs T + 1/2 rho |U|^2`` where
    ``E`` collects the in-plane kinetic energy of ``g1`` and the transverse
    energy carried by ``g2``.
    """
    g1 = np.atleast_2d(g1)
    g2 = np.atleast_2d(g2)
    w = grid.weight
    rho = w * g1.sum(axis=1)
    if check:
        _check_positive("rho", rho, offset)
    mom = w * (g1 @ grid.nodes)
    with np.errstate(divide="ignore", invalid="ignore"):
        U = mom / rho[:, None]
    E = 0.5 * w * (g1 @ grid.speed2 + g2.sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        T = (2.0 * E - rho * np.sum(U ** 2, axis=1)) / (3.0 * rho * gas.Rs)
    if check:
        _check_positive("T", T, offset)
    return rho, U, T, E


def moments_from_field(f: ChuField, grid: VelocityGrid, gas: GasParameters,
                       point: int) -> Moments:
    if f.g1.shape[-1] != grid.size:
        raise ValueError(f"field has {f.g1.shape[-1]} nodes, grid has {grid.size}")
    g1 = np.atleast_2d(f.g1)[point]
    g2 = np.atleast_2d(f.g2)[point]
    rho, U, T, E = field_moments(g1[None], g2[None], grid, gas, offset=point)
    return Moments(float(rho[0]), U[0], float(T[0]), float(E[0]))


def relaxation_time(p0: float, T0: float, gas: GasParameters) -> tuple[float, float]:
    """Hard-sphere mean free path and BGK relaxation time at ``(p0, T0)``."""
    if not (p0 > 0 and T0 > 0):
        raise ValueError(f"pressure and temperature must be positive, got {p0}, {T0}")
    rho0 = p0 / (gas.Rs * T0)
    lam = gas.kB / (math.sqrt(2.0) * math.pi * rho0 * gas.Rs * gas.d ** 2)
    tau = 4.0 * lam / math.sqrt(8.0 * math.pi * gas.Rs * T0)
    return lam, tau
