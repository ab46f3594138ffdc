"""Sampling datasets from simulated populations and scoring predictions against truth."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .fwsim import HaplotypeTable
from .mixture import MixtureModel

POP1, POP2, BOTH = "pop1", "pop2", "both"


@dataclass(frozen=True, eq=False)
class SampledDataset:
    """A sample of ``n`` individuals plus its table of distinct haplotypes.

    ``unique`` rows are sorted lexicographically; ``ndb`` counts each in the
    sample, ``true_freq`` is its frequency in the source population(s) and
    ``source`` tags where it was drawn from.
    """

    db: npt.NDArray[np.int64]
    unique: npt.NDArray[np.int64]
    ndb: npt.NDArray[np.int64]
    true_freq: npt.NDArray[np.float64]
    source: tuple[str, ...]
    locus_names: tuple[str, ...]
    n1: int | None = None

    @property
    def n(self) -> int:
        return self.db.shape[0]

    @property
    def r(self) -> int:
        return self.db.shape[1]


def _draw(pop: HaplotypeTable, n: int, rng: np.random.Generator) -> npt.NDArray[np.int64]:
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return rng.choice(len(pop), size=n, replace=True, p=pop.pop_freq)


def sample_dataset(pop: HaplotypeTable, n: int, rng: np.random.Generator) -> SampledDataset:
    """Draw ``n`` individuals with replacement, each haplotype with probability N / sum(N)."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    idx = _draw(pop, n, rng)
    rows, ndb = np.unique(idx, return_counts=True)
    return SampledDataset(
        db=pop.haplotypes[idx],
        unique=pop.haplotypes[rows],
        ndb=ndb.astype(np.int64),
        true_freq=pop.pop_freq[rows],
        source=(POP1,) * rows.size,
        locus_names=pop.locus_names,
    )


def sample_mixture(
    pop1: HaplotypeTable,
    pop2: HaplotypeTable,
    n: int,
    w1: float,
    rng: np.random.Generator,
    n1: int | None = None,
) -> SampledDataset:
    """Two-population sample: ``n1 ~ Binomial(n, w1)`` from ``pop1``, the rest from ``pop2``.

    The true frequency of a sampled haplotype is ``(n1/n) f1 + (n2/n) f2``
    where ``f1``/``f2`` count only if the haplotype was drawn from that
    population (0 otherwise).  ``n1`` overrides the binomial split.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if not 0.0 < w1 < 1.0:
        raise ValueError("mixing weight w1 must lie in (0, 1)")
    if pop1.r != pop2.r:
        raise ValueError("populations have different locus counts")
    if n1 is None:
        n1 = int(rng.binomial(n, w1))
    elif not 0 <= n1 <= n:
        raise ValueError("n1 must lie in [0, n]")
    n2 = n - n1
    idx1 = _draw(pop1, n1, rng)
    idx2 = _draw(pop2, n2, rng)
    db = np.concatenate((pop1.haplotypes[idx1], pop2.haplotypes[idx2])).reshape(n, pop1.r)

    merged: dict[tuple[int, ...], list] = {}
    for which, pop, idx, share in ((0, pop1, idx1, n1 / n), (1, pop2, idx2, n2 / n)):
        rows, cnt = np.unique(idx, return_counts=True)
        for row, k in zip(rows, cnt):
            key = tuple(int(a) for a in pop.haplotypes[row])
            entry = merged.setdefault(key, [0, 0.0, [False, False]])
            entry[0] += int(k)
            entry[1] += share * float(pop.pop_freq[row])
            entry[2][which] = True
    keys = sorted(merged)
    tags = tuple(BOTH if all(merged[k][2]) else (POP1 if merged[k][2][0] else POP2) for k in keys)
    return SampledDataset(
        db=db,
        unique=np.array(keys, dtype=np.int64).reshape(len(keys), pop1.r),
        ndb=np.array([merged[k][0] for k in keys], dtype=np.int64),
        true_freq=np.array([merged[k][1] for k in keys]),
        source=tags,
        locus_names=pop1.locus_names,
        n1=n1,
    )


def singleton_proportion(ds: SampledDataset) -> float:
    """Share of the sample made up of haplotypes seen exactly once."""
    return float(np.sum(ds.ndb == 1)) / ds.n


def aggregate(db, locus_names: Sequence[str] = ()) -> HaplotypeTable:
    """Distinct rows of ``db`` with their multiplicities."""
    return HaplotypeTable.from_rows(db, locus_names=locus_names)


@dataclass(frozen=True, eq=False)
class EvaluationTable:
    haplotypes: npt.NDArray[np.int64]
    true_freq: npt.NDArray[np.float64]
    predicted_freq: npt.NDArray[np.float64]
    source: tuple[str, ...]
    locus_names: tuple[str, ...]

    def __len__(self) -> int:
        return self.true_freq.size


def evaluation_table(ds: SampledDataset, model: MixtureModel) -> EvaluationTable:
    if model.r != ds.r:
        raise ValueError(f"model has {model.r} loci, dataset has {ds.r}")
    return EvaluationTable(
        haplotypes=ds.unique,
        true_freq=ds.true_freq,
        predicted_freq=model.predict(ds.unique),
        source=ds.source,
        locus_names=ds.locus_names,
    )


def log_log_summary(true_freq, predicted_freq) -> tuple[float | None, float]:
    """Pearson r of log10 frequencies (None when undefined) and mean log10(pred / true)."""
    lt = np.log10(np.asarray(true_freq, dtype=float))
    lp = np.log10(np.asarray(predicted_freq, dtype=float))
    ratio = float(np.mean(lp - lt)) if lt.size else float("nan")
    if lt.size < 2 or np.ptp(lt) == 0 or np.ptp(lp) == 0:
        return None, ratio
    return float(np.corrcoef(lt, lp)[0, 1]), ratio
