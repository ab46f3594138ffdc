"""Forward Fisher-Wright simulation of haploid r-locus STR haplotypes.

Every individual leaves Poisson(alpha) offspring; each offspring locus
mutates one repeat up or down (equal odds) with that locus' probability.
The population is stored aggregated by haplotype: a haplotype carried by N
parents leaves Poisson(alpha * N) offspring, which is the same as summing
N individual draws.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt

DEFAULT_CAP = 10**8


class ExtinctionError(RuntimeError):
    def __init__(self, generation: int):
        super().__init__(f"population went extinct in generation {generation}")
        self.generation = generation


class PopulationCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimParams:
    generations: int
    initial_size: int
    loci: int
    mu: tuple[float, ...]
    alpha: float = 1.0
    seed: int | None = None
    cap: int = DEFAULT_CAP

    def __post_init__(self) -> None:
        mu = tuple(float(m) for m in np.atleast_1d(self.mu))
        object.__setattr__(self, "mu", mu)
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.initial_size < 1:
            raise ValueError("initial population size must be >= 1")
        if self.loci < 1:
            raise ValueError("need at least one locus")
        if len(mu) != self.loci:
            raise ValueError(f"expected {self.loci} mutation rates, got {len(mu)}")
        if any(not 0.0 <= m <= 1.0 for m in mu):
            raise ValueError("mutation rates must lie in [0, 1]")
        if not self.alpha > 0:
            raise ValueError("growth rate alpha must be positive")


@dataclass(frozen=True, eq=False)
class HaplotypeTable:
    """Unique haplotypes (rows sorted lexicographically) with multiplicities."""

    haplotypes: npt.NDArray[np.int64]
    counts: npt.NDArray[np.int64]
    locus_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        haps = np.asarray(self.haplotypes, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64).ravel()
        if haps.ndim != 2 or haps.shape[0] != counts.size:
            raise ValueError("haplotypes must be an H x r matrix matching counts")
        if counts.size == 0:
            raise ValueError("a haplotype table needs at least one row")
        if np.any(counts < 1):
            raise ValueError("multiplicities must be >= 1")
        order = np.lexsort(haps.T[::-1])
        haps, counts = haps[order], counts[order]
        if haps.shape[0] > 1 and np.any(np.all(haps[1:] == haps[:-1], axis=1)):
            raise ValueError("duplicate haplotype rows; use HaplotypeTable.from_rows to aggregate")
        names = tuple(self.locus_names) or tuple(f"Locus{k + 1}" for k in range(haps.shape[1]))
        if len(names) != haps.shape[1]:
            raise ValueError("locus name count does not match haplotype width")
        object.__setattr__(self, "haplotypes", haps)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "locus_names", names)

    @classmethod
    def from_rows(cls, rows, counts=None, locus_names: Sequence[str] = ()) -> "HaplotypeTable":
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        w = np.ones(rows.shape[0], dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        agg = np.bincount(inv.ravel(), weights=w, minlength=uniq.shape[0]).astype(np.int64)
        keep = agg > 0
        return cls(uniq[keep], agg[keep], tuple(locus_names))

    @property
    def r(self) -> int:
        return self.haplotypes.shape[1]

    @property
    def size(self) -> int:
        return int(self.counts.sum())

    @property
    def pop_freq(self) -> npt.NDArray[np.float64]:
        return self.counts / self.counts.sum()

    def __len__(self) -> int:
        return self.counts.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, HaplotypeTable):
            return NotImplemented
        return (
            self.locus_names == other.locus_names
            and np.array_equal(self.haplotypes, other.haplotypes)
            and np.array_equal(self.counts, other.counts)
        )

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(a) for a in h): int(n) for h, n in zip(self.haplotypes, self.counts)}


def shift_locations(table: HaplotypeTable, y) -> HaplotypeTable:
    """Translate every haplotype by the integer vector ``y``."""
    y = np.asarray(y)
    if y.shape != (table.r,):
        raise ValueError(f"shift vector must have length {table.r}")
    if not np.array_equal(y, np.round(y)):
        raise ValueError("shift must be integer valued")
    return HaplotypeTable(table.haplotypes + y.astype(np.int64), table.counts.copy(), table.locus_names)


def _mutate(parents: npt.NDArray[np.int64], mu: npt.NDArray[np.float64], rng) -> npt.NDArray[np.int64]:
    """Apply at least one +-1 step to every row of ``parents``.

    The first mutated locus is drawn from its conditional law given that at
    least one locus mutates; later loci then mutate independently.
    """
    m, r = parents.shape
    keep = np.cumprod(np.concatenate(([1.0], 1.0 - mu[:-1])))
    first_w = mu * keep
    first = rng.choice(r, size=m, p=first_w / first_w.sum())
    hit = (rng.random((m, r)) < mu) & (np.arange(r) > first[:, None])
    hit[np.arange(m), first] = True
    steps = np.where(rng.random((m, r)) < 0.5, -1, 1)
    return parents + np.where(hit, steps, 0)


def simulate(params: SimParams, on_generation: Callable[[int, int, int], None] | None = None) -> HaplotypeTable:
    """Run the forward simulation and return the final generation.

    ``on_generation(g, parents, offspring)`` is called after every
    generation with the sizes before and after reproduction.
    """
    rng = np.random.default_rng(params.seed)
    r = params.loci
    mu = np.asarray(params.mu, dtype=np.float64)
    p_clean = float(np.prod(1.0 - mu))
    haps = np.zeros((1, r), dtype=np.int64)
    counts = np.array([params.initial_size], dtype=np.int64)
    for g in range(1, params.generations + 1):
        parents = int(counts.sum())
        offspring = rng.poisson(params.alpha * counts)
        total = int(offspring.sum())
        if on_generation is not None:
            on_generation(g, parents, total)
        if total == 0:
            raise ExtinctionError(g)
        if total > params.cap:
            raise PopulationCapError(f"population reached {total} > cap {params.cap} in generation {g}")
        if p_clean < 1.0:
            n_mut = offspring - rng.binomial(offspring, p_clean)
        else:
            n_mut = np.zeros_like(offspring)
        clean = offspring - n_mut
        mutants = _mutate(np.repeat(haps, n_mut, axis=0), mu, rng) if n_mut.any() else haps[:0]
        rows = np.concatenate((haps[clean > 0], mutants))
        weights = np.concatenate((clean[clean > 0], np.ones(mutants.shape[0], dtype=np.int64)))
        haps, inv = np.unique(rows, axis=0, return_inverse=True)
        counts = np.bincount(inv.ravel(), weights=weights, minlength=haps.shape[0]).astype(np.int64)
    return HaplotypeTable(haps, counts)


def linspace_rates(lo: float, hi: float, r: int) -> tuple[float, ...]:
    """``r`` evenly spaced mutation rates from ``lo`` to ``hi`` inclusive."""
    return tuple(float(v) for v in np.linspace(lo, hi, r))
