"""Outer training loops: iterative subspace growth plus a final fit.

``learn`` consumes an iterator of fresh sample batches.  Each iteration runs
the configured direction finder on a new batch, extends the basis with the
accepted candidates (the RCN mode keeps only the top one per round), and
stops early once a round yields nothing.  A final fresh batch then fits the
piecewise-constant hypothesis on a grid over the discovered subspace.

For the trace, a dedicated batch is drawn once up front; interim classifiers
are fitted and evaluated on that same batch over an aligned chain of refined
partitions, so the recorded interim errors are non-increasing by
construction rather than up to batch-to-batch fluctuation.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .directions import (
    CandidateSet,
    DirectionFinderConfig,
    mim_direction_candidates,
    mlc_direction_candidates,
    orthonormal_extend,
)
from .errors import BasisCapExceededError, ConfigError, DataExhaustedError
from .models import NoiseSpec, sample_dataset
from .partition import (
    SubspaceBasis,
    build_partition,
    constant_classifier,
    fit_piecewise_constant,
    refine_partition,
)
from .validation import rng_from_seed

VALID_MODES = ("mlc-agnostic", "mim-agnostic", "mim-rcn")


@dataclass(frozen=True)
class LearnerConfig:
    mode: str = "mlc-agnostic"
    T: int | None = None
    n_per_iter: int = 50_000
    finder: DirectionFinderConfig = field(default_factory=DirectionFinderConfig)
    final_eps: float | None = None
    basis_dim_cap: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in VALID_MODES:
            raise ConfigError(f"unknown learner mode {self.mode!r}")
        if self.n_per_iter < 1:
            raise ConfigError("n_per_iter must be at least 1")
        if self.T is not None and self.T < 1:
            raise ConfigError("T must be at least 1")
        if self.final_eps is None:
            object.__setattr__(self, "final_eps", self.finder.cube_eps)
        if self.basis_dim_cap is None:
            object.__setattr__(self, "basis_dim_cap", 2 * self.finder.k_hint + 4)

    @property
    def iterations(self):
        if self.mode == "mim-rcn":
            return 2 * self.finder.k_hint
        if self.T is not None:
            return self.T
        # stand-in for "sufficiently large": the potential argument spends
        # at least sigma-scale potential per productive round
        return math.ceil(4.0 * self.finder.k_hint**2 / self.finder.sigma**2)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    k: int
    candidates: int
    interim_error: float
    potential: float | None = None


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.k < self.records[-1].k:
            raise AssertionError("basis dimension must be non-decreasing")
        self.records.append(record)

    @property
    def k_final(self):
        return self.records[-1].k if self.records else 0

    @property
    def iterations(self):
        return len(self.records)

    def interim_errors(self):
        return [r.interim_error for r in self.records]

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["iteration", "k_t", "candidates", "interim_error", "potential"])
        for r in self.records:
            pot = "" if r.potential is None else repr(float(r.potential))
            writer.writerow([r.iteration, r.k, r.candidates, repr(float(r.interim_error)), pot])
        text = buf.getvalue()
        if path_or_buf is not None:
            if isinstance(path_or_buf, (str, bytes)):
                with open(path_or_buf, "w", newline="") as f:
                    f.write(text)
            else:
                path_or_buf.write(text)
        return text


class BatchSampler:
    """Endless deterministic batch source for a concept and noise channel.

    Batch t is sampled with the spawn key (base_seed, t), so any prefix of
    batches is reproducible regardless of who consumes them.
    """

    def __init__(self, concept, noise, n_per_batch, seed):
        self.concept = concept
        self.noise = noise if noise is not None else NoiseSpec()
        self.n_per_batch = int(n_per_batch)
        self.seed = int(seed)
        self._next = 0

    def __iter__(self):
        return self

    def __next__(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self._next,))
        self._next += 1
        return sample_dataset(self.concept, self.noise, self.n_per_batch, ss)


class ArrayBatcher:
    """Carve a fixed dataset into disjoint sequential batches."""

    def __init__(self, dataset, n_per_batch):
        self.dataset = dataset
        self.n_per_batch = int(n_per_batch)
        self._cursor = 0

    def __iter__(self):
        return self

    def __next__(self):
        if self._cursor + self.n_per_batch > self.dataset.n:
            raise StopIteration
        sl = slice(self._cursor, self._cursor + self.n_per_batch)
        self._cursor += self.n_per_batch
        return type(self.dataset)(self.dataset.xs[sl], self.dataset.ys[sl], self.dataset.label_set)


def _next_batch(source):
    try:
        return next(source)
    except StopIteration:
        raise DataExhaustedError("training data source ran out of batches") from None


def potential(truth_basis, basis):
    """Total squared mass of the truth rows outside the discovered subspace."""
    truth = truth_basis.rows if isinstance(truth_basis, SubspaceBasis) else np.atleast_2d(truth_basis)
    truth = SubspaceBasis(np.asarray(truth, dtype=float))
    total = 0.0
    for b in truth.rows:
        resid = basis.project_out(b) if isinstance(basis, SubspaceBasis) else SubspaceBasis(basis).project_out(b)
        total += float(resid @ resid)
    return total


def zero_one_error(classifier, dataset):
    """Fraction of samples the classifier labels differently from the data."""
    if dataset.n == 0:
        raise ConfigError("zero_one_error needs a nonempty dataset")
    return float(np.mean(classifier.predict(dataset.xs) != dataset.ys))


def opt_of_rcn(concept, matrix, n_mc, seed=0):
    """Monte-Carlo estimate of Pr[f(x) != y] under the confusion channel.

    Returns (estimate, standard error).
    """
    rng = rng_from_seed(seed)
    xs = rng.standard_normal((int(n_mc), concept.dim))
    f = np.asarray(concept.predict(xs))
    labels = list(concept.label_set)
    diag = np.array([matrix.entries[labels.index(int(v)), labels.index(int(v))] for v in labels])
    miss = 1.0 - diag[np.searchsorted(labels, f)]
    return float(np.mean(miss)), float(np.std(miss) / math.sqrt(len(miss)))


def _interim_classifier(chain_partition, basis, trace_batch, cfg):
    """Fit on the trace batch over the aligned partition chain."""
    if basis.k == 0:
        return None, constant_classifier(trace_batch)
    if chain_partition is None:
        part = build_partition(basis, cfg.finder.cube_eps, cfg.finder.shift)
    elif basis.k > chain_partition.k:
        part = refine_partition(chain_partition, basis.rows[chain_partition.k :])
    else:
        part = chain_partition
    return part, fit_piecewise_constant(part, trace_batch)


def learn(data_source, cfg, truth_basis=None):
    """Run the configured iterative learner.

    data_source is an iterator of LabeledDataset batches (fresh and i.i.d.
    per draw).  Returns (classifier, trace).  When truth_basis is given the
    trace records the residual potential after every iteration.
    """
    source = iter(data_source)
    trace_batch = _next_batch(source)
    basis = SubspaceBasis.empty(trace_batch.dim)
    trace = TrainTrace()
    chain_partition = None
    rcn_mode = cfg.mode == "mim-rcn"

    for t in range(1, cfg.iterations + 1):
        batch = _next_batch(source)
        if cfg.mode == "mlc-agnostic":
            found = mlc_direction_candidates(batch, basis, cfg.finder)
        else:
            found = mim_direction_candidates(batch, basis, cfg.finder)
        if len(found) == 0:
            break
        accepted = CandidateSet(found.top()[None, :], np.array([np.max(found.eigenvalues)])) if rcn_mode else found
        basis = orthonormal_extend(basis, accepted)
        if basis.k > cfg.basis_dim_cap:
            raise BasisCapExceededError(
                f"basis dimension {basis.k} exceeded the cap {cfg.basis_dim_cap}", trace=trace
            )
        chain_partition, interim = _interim_classifier(chain_partition, basis, trace_batch, cfg)
        trace.append(
            TraceRecord(
                iteration=t,
                k=basis.k,
                candidates=len(found),
                interim_error=zero_one_error(interim, trace_batch),
                potential=None if truth_basis is None else potential(truth_basis, basis),
            )
        )

    final_batch = _next_batch(source)
    if basis.k == 0:
        classifier = constant_classifier(final_batch)
    else:
        final_shift = 0.25 * cfg.final_eps
        final_partition = build_partition(basis, cfg.final_eps, final_shift)
        classifier = fit_piecewise_constant(final_partition, final_batch)
    return classifier, trace
