"""Exact evolution of the walker's occupation law on the lattice.

The law y_j(t_n) of the walker's position satisfies the master equation

    y_j(t_{n+1}) = sum_k p_k y_{j-k}(t_n),

a discrete convolution with the one-step kernel.  This module evolves dense
occupation arrays exactly (up to float rounding), serving as the
deterministic oracle against which Monte Carlo ensembles are checked.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .kernel import LatticeKernel

# Support is clipped at this many sites from the origin per axis; the lost
# mass is tracked in ``mass_deficit`` rather than silently renormalized.
DEFAULT_MAX_RADIUS = 4096

# Above this work estimate (output size x kernel size) convolution switches
# from direct summation to the FFT path; both agree to ~1e-15.
_DIRECT_WORK_LIMIT = 20_000_000


@dataclass(frozen=True)
class LatticeDistribution:
    """Probability mass function on the centered cube of the lattice.

    ``mass`` has shape (2R+1,)*dim with the origin at index (R,...,R);
    ``mass[idx]`` is the probability of lattice vector idx - R.
    """

    dim: int
    h: float
    mass: np.ndarray
    time_index: int = 0
    mass_deficit: float = 0.0
    tau: float | None = None  # time step of the kernel that evolved this law

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.ndim != self.dim or len(set(m.shape)) != 1 or m.shape[0] % 2 == 0:
            raise ValueError("mass array must be an odd-sized cube of rank dim")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @property
    def support_radius(self) -> int:
        return self.mass.shape[0] // 2

    @classmethod
    def delta(cls, dim: int, h: float) -> "LatticeDistribution":
        """Point mass at the origin (the walk's initial law)."""
        m = np.zeros((1,) * dim)
        m[(0,) * dim] = 1.0
        return cls(dim=dim, h=h, mass=m)

    def value(self, j) -> float:
        """Mass at lattice vector j (0 outside the stored support)."""
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        R = self.support_radius
        if np.any(np.abs(j) > R):
            return 0.0
        return float(self.mass[tuple(j + R)])

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def nonzero_sites(self) -> tuple[np.ndarray, np.ndarray]:
        """(sites, masses) for all sites carrying mass, sites as int vectors."""
        idx = np.argwhere(self.mass != 0.0)
        return idx - self.support_radius, self.mass[tuple(idx.T)]

    def to_csv(self, path) -> None:
        sites, masses = self.nonzero_sites()
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"j{i+1}" for i in range(self.dim)] + ["mass"])
            for site, y in zip(sites, masses):
                writer.writerow([*(int(c) for c in site), repr(float(y))])

    def to_json_dict(self) -> dict:
        sites, masses = self.nonzero_sites()
        return {
            "dim": self.dim,
            "h": self.h,
            "tau": self.tau,
            "time_index": self.time_index,
            "mass_deficit": self.mass_deficit,
            "sites": sites.tolist(),
            "mass": [float(y) for y in masses],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2)


def kernel_distribution(kernel: LatticeKernel) -> LatticeDistribution:
    """The one-step jump law viewed as a distribution (time_index 0)."""
    R = kernel.trunc_radius
    m = np.zeros((2 * R + 1,) * kernel.dim)
    m[(R,) * kernel.dim] = kernel.p0
    sites = kernel.shells.sites
    m[tuple((sites + R).T)] = kernel.site_probabilities
    return LatticeDistribution(dim=kernel.dim, h=kernel.h, mass=m, tau=kernel.tau)


def _convolve_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    work = a.size * b.size
    if work <= _DIRECT_WORK_LIMIT:
        return signal.convolve(a, b, mode="full", method="direct")
    out = signal.fftconvolve(a, b, mode="full")
    return np.maximum(out, 0.0)  # FFT rounding may produce -1e-17 entries


def _clip(mass: np.ndarray, dim: int, max_radius: int) -> tuple[np.ndarray, float]:
    R = mass.shape[0] // 2
    if R <= max_radius:
        return mass, 0.0
    lo, hi = R - max_radius, R + max_radius + 1
    clipped = mass[(slice(lo, hi),) * dim]
    return clipped, float(mass.sum() - clipped.sum())


def convolve(
    p: LatticeDistribution,
    q: LatticeDistribution,
    max_radius: int = DEFAULT_MAX_RADIUS,
) -> LatticeDistribution:
    """Discrete convolution (p * q)_j = sum_k p_k q_{j-k}.

    The support radius of the result is the sum of the input radii, clipped
    at ``max_radius`` with the lost mass added to the deficit.
    """
    if p.dim != q.dim or p.h != q.h:
        raise ValueError("convolution requires matching dim and mesh width")
    mass = _convolve_arrays(p.mass, q.mass)
    mass, lost = _clip(mass, p.dim, max_radius)
    return LatticeDistribution(
        dim=p.dim,
        h=p.h,
        mass=mass,
        tau=p.tau if p.tau is not None else q.tau,
        time_index=p.time_index + q.time_index,
        mass_deficit=p.mass_deficit + q.mass_deficit + lost,
    )


def step(
    dist: LatticeDistribution,
    kernel: LatticeKernel,
    max_radius: int = DEFAULT_MAX_RADIUS,
) -> LatticeDistribution:
    """One master-equation step: convolve the law with the jump kernel."""
    if dist.dim != kernel.dim or dist.h != kernel.h:
        raise ValueError("distribution and kernel must share dim and mesh width")
    if kernel.tau == 0.0 or kernel.sigma == 0.0:
        return LatticeDistribution(
            dim=dist.dim, h=dist.h, mass=dist.mass, tau=kernel.tau,
            time_index=dist.time_index + 1, mass_deficit=dist.mass_deficit,
        )
    mass = _convolve_arrays(dist.mass, kernel_distribution(kernel).mass)
    mass, lost = _clip(mass, dist.dim, max_radius)
    return LatticeDistribution(
        dim=dist.dim,
        h=dist.h,
        mass=mass,
        tau=kernel.tau,
        time_index=dist.time_index + 1,
        mass_deficit=dist.mass_deficit + lost,
    )


def evolve(
    dist: LatticeDistribution,
    kernel: LatticeKernel,
    n_steps: int,
    max_radius: int = DEFAULT_MAX_RADIUS,
) -> LatticeDistribution:
    """Apply ``n_steps`` master-equation steps."""
    for _ in range(n_steps):
        dist = step(dist, kernel, max_radius)
    return dist


def characteristic_function(dist: LatticeDistribution, xi) -> np.ndarray:
    """CF of the rescaled law: sum_j y_j exp(i h j.xi), evaluated per grid point.

    With the mesh factor h this is the n-step analogue of p-hat(-h xi), the
    quantity whose limit is the Green-function CF.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if dist.dim == 1 and xi.ndim == 1:
        xi = xi[:, None]
    sites, masses = dist.nonzero_sites()
    phases = sites.astype(float) @ (dist.h * xi.T)
    return (masses[:, None] * np.exp(1j * phases)).sum(axis=0)
