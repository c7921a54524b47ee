"""Monte Carlo sampling of lattice walks S_n = h(X_1 + ... + X_n).

Sampling is exact with respect to the (truncated, renormalized) kernel: an
alias table over the finitely many jump outcomes gives O(1) draws whose law
is the kernel's, bit for bit.  Positions are accumulated in integer lattice
coordinates and scaled by the mesh width only on output, so no float drift
can move a walker off the lattice.

Determinism contract
--------------------
Walker ``w`` of a run with seed ``s`` consumes a dedicated, fixed window of
the counter-based Philox-4x64 stream keyed by ``s`` (two float64 draws per
step, the window padded to a whole number of 128-bit counter blocks).  Philox
comes from the Random123 family and passes the standard statistical
batteries (TestU01 BigCrush); because the window depends only on (s, w), the
resulting ensemble is identical for any chunking or thread count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .kernel import LatticeKernel

_CHUNK_WALKERS = 8192


@dataclass(frozen=True)
class JumpSampler:
    """Alias table over every kernel outcome (the stay-put outcome included).

    ``displacements[i]`` is the integer jump of outcome i; a draw picks slot
    i uniformly and takes it with probability ``accept[i]``, otherwise takes
    ``alias[i]``.
    """

    kernel: LatticeKernel
    displacements: np.ndarray  # (n_outcomes, dim) int64
    weights: np.ndarray        # (n_outcomes,) the exact outcome probabilities
    accept: np.ndarray         # (n_outcomes,) float64 in [0, 1]
    alias: np.ndarray          # (n_outcomes,) int64

    @property
    def n_outcomes(self) -> int:
        return len(self.weights)

    def induced_probabilities(self) -> np.ndarray:
        """Outcome law the table actually samples from (for exactness checks)."""
        n = self.n_outcomes
        p = self.accept / n
        np.add.at(p, self.alias, (1.0 - self.accept) / n)
        return p

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        """Draw ``size`` outcome indices (used for single-law statistics)."""
        u = rng.random(size)
        v = rng.random(size)
        idx = (u * self.n_outcomes).astype(np.int64)
        return np.where(v < self.accept[idx], idx, self.alias[idx])


def build_sampler(kernel: LatticeKernel) -> JumpSampler:
    """Vose alias construction over origin + all retained sites."""
    sites = kernel.shells.sites
    displacements = np.vstack([np.zeros((1, kernel.dim), dtype=np.int64), sites])
    weights = np.concatenate([[kernel.p0], kernel.site_probabilities])
    n = len(weights)

    scaled = weights * n
    accept = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        lo = small.pop()
        hi = large.pop()
        accept[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        (small if scaled[hi] < 1.0 else large).append(hi)
    for i in small + large:
        accept[i] = 1.0

    for arr in (displacements, weights, accept, alias):
        arr.setflags(write=False)
    return JumpSampler(kernel, displacements, weights, accept, alias)


@dataclass(frozen=True)
class WalkEnsemble:
    """Final positions of independent walkers after n_steps jumps."""

    dim: int
    h: float
    tau: float
    n_steps: int
    n_walkers: int
    seed: int
    lattice_positions: np.ndarray  # (n_walkers, dim) int64

    @property
    def final_positions(self) -> np.ndarray:
        """Physical positions, exact lattice points times the mesh width."""
        return self.lattice_positions.astype(float) * self.h

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"x{i+1}" for i in range(self.dim)])
            for row in self.final_positions:
                writer.writerow([repr(float(x)) for x in row])

    def summary_dict(self, quantile_levels=(0.05, 0.25, 0.5, 0.75, 0.95)) -> dict:
        x = self.final_positions
        first = x[:, 0]
        qs = np.quantile(first, quantile_levels)
        hist = histogram(self, bin_width=self.h if self.dim == 1 else 4 * self.h)
        return {
            "dim": self.dim,
            "h": self.h,
            "tau": self.tau,
            "n_steps": self.n_steps,
            "n_walkers": self.n_walkers,
            "seed": self.seed,
            "mean": x.mean(axis=0).tolist(),
            "mean_abs_first_coordinate": float(np.abs(first).mean()),
            "quantiles_first_coordinate": {
                str(q): float(v) for q, v in zip(quantile_levels, qs)
            },
            "histogram": hist.to_json_dict(max_bins=200),
        }


def _walker_words(n_steps: int) -> int:
    # two float64 draws per step, padded to whole Philox blocks (4 words)
    return 4 * ((2 * n_steps + 3) // 4)


def _run_chunk(
    sampler: JumpSampler, seed: int, first: int, count: int, n_steps: int,
    out: np.ndarray,
) -> None:
    words = _walker_words(n_steps)
    rng = Generator(Philox(key=np.uint64(seed)).advance(first * words // 4))
    draws = rng.random((count, words))
    u = draws[:, : 2 * n_steps : 2]
    v = draws[:, 1 : 2 * n_steps : 2]
    idx = (u * sampler.n_outcomes).astype(np.int64)
    outcomes = np.where(v < sampler.accept[idx], idx, sampler.alias[idx])
    out[first : first + count] = sampler.displacements[outcomes].sum(axis=1)


def run_walks(
    sampler: JumpSampler,
    n_steps: int,
    n_walkers: int,
    seed: int,
    threads: int = 1,
) -> WalkEnsemble:
    """Simulate walkers; output depends only on (kernel, seed, n_steps, n_walkers)."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if n_walkers < 1:
        raise ValueError("n_walkers must be >= 1")
    kernel = sampler.kernel
    positions = np.zeros((n_walkers, kernel.dim), dtype=np.int64)
    if n_steps > 0 and kernel.sigma > 0.0:
        # cap per-chunk buffers; chunk boundaries never affect results because
        # each walker owns a fixed stream window
        chunk = int(min(_CHUNK_WALKERS, max(1, 4_000_000 // _walker_words(n_steps))))
        chunks = [
            (start, min(chunk, n_walkers - start))
            for start in range(0, n_walkers, chunk)
        ]
        if threads <= 1 or len(chunks) == 1:
            for start, count in chunks:
                _run_chunk(sampler, seed, start, count, n_steps, positions)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(_run_chunk, sampler, seed, start, count, n_steps, positions)
                    for start, count in chunks
                ]
                for fut in futures:
                    fut.result()
    positions.setflags(write=False)
    return WalkEnsemble(
        dim=kernel.dim,
        h=kernel.h,
        tau=kernel.tau,
        n_steps=n_steps,
        n_walkers=n_walkers,
        seed=int(seed),
        lattice_positions=positions,
    )


def empirical_cf(ensemble: WalkEnsemble, xi_grid) -> np.ndarray:
    """Empirical characteristic function (1/M) sum_m exp(i xi.S_m) per grid point."""
    if ensemble.n_walkers == 0:
        raise ValueError("empty ensemble")
    xi = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    if ensemble.dim == 1 and xi.ndim == 1:
        xi = xi[:, None]
    phases = ensemble.final_positions @ xi.T  # (M, G)
    return np.exp(1j * phases).mean(axis=0)


@dataclass(frozen=True)
class Histogram:
    """Density histogram on cubic bins centered at multiples of bin_width."""

    dim: int
    bin_width: float
    origin_index: np.ndarray  # (dim,) lattice index of counts[0,...,0]
    counts: np.ndarray
    n_samples: int

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n_samples * self.bin_width**self.dim)

    def bin_centers_first_axis(self) -> np.ndarray:
        n = self.counts.shape[0]
        return (np.arange(n) + self.origin_index[0]) * self.bin_width

    def to_json_dict(self, max_bins: int | None = None) -> dict:
        idx = np.argwhere(self.counts > 0)
        dens = self.density[tuple(idx.T)]
        if max_bins is not None and len(idx) > max_bins:
            keep = np.argsort(dens)[::-1][:max_bins]
            keep.sort()
            idx, dens = idx[keep], dens[keep]
        centers = (idx + self.origin_index) * self.bin_width
        return {
            "bin_width": self.bin_width,
            "n_samples": self.n_samples,
            "centers": centers.tolist(),
            "density": dens.tolist(),
        }


def histogram(ensemble: WalkEnsemble, bin_width: float) -> Histogram:
    """Bin the ensemble; densities integrate to 1 over the binned volume."""
    if bin_width < ensemble.h:
        raise ValueError("bin_width must be at least the mesh width h")
    x = ensemble.final_positions
    bins = np.floor(x / bin_width + 0.5).astype(np.int64)
    lo = bins.min(axis=0)
    shape = tuple(bins.max(axis=0) - lo + 1)
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(counts, tuple((bins - lo).T), 1)
    counts.setflags(write=False)
    return Histogram(
        dim=ensemble.dim,
        bin_width=float(bin_width),
        origin_index=lo,
        counts=counts,
        n_samples=ensemble.n_walkers,
    )
