"""Finite populations and probability sampling designs (SRSWOR, stratified)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


@dataclass(frozen=True)
class Population:
    """Immutable finite universe: ids, auxiliary covariate z, study variables."""

    ids: tuple
    z: np.ndarray
    variables: Mapping[str, np.ndarray]
    strata: tuple | None = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "z", z)
        if z.size < 1:
            raise ValueError("population must contain at least one unit")
        if len(self.ids) != z.size:
            raise ValueError("ids and z length mismatch")
        if not np.all(np.isfinite(z)):
            raise ValueError("auxiliary covariate must be finite everywhere")
        clean = {}
        for name, vals in self.variables.items():
            v = np.asarray(vals, dtype=float)
            if v.size != z.size:
                raise ValueError(f"study variable {name!r} length mismatch")
            clean[name] = v
        object.__setattr__(self, "variables", clean)
        if self.strata is not None and len(self.strata) != z.size:
            raise ValueError("strata length mismatch")

    @property
    def size(self) -> int:
        return self.z.size

    def stratum_indices(self) -> dict:
        """Map stratum label -> array of unit indices."""
        if self.strata is None:
            raise ValueError("population has no stratum labels")
        out: dict = {}
        for i, h in enumerate(self.strata):
            out.setdefault(h, []).append(i)
        return {h: np.asarray(ix, dtype=int) for h, ix in out.items()}

    @classmethod
    def from_csv(cls, path) -> "Population":
        """Load a population from CSV with columns id, [stratum], z, variables."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "id" not in reader.fieldnames:
                raise ValueError("population CSV needs a header with an 'id' column")
            if "z" not in reader.fieldnames:
                raise ValueError("population CSV needs a 'z' column")
            var_names = [
                c for c in reader.fieldnames if c not in ("id", "stratum", "z")
            ]
            ids, z, strata = [], [], []
            variables: dict = {name: [] for name in var_names}
            has_stratum = "stratum" in reader.fieldnames
            for row in reader:
                ids.append(row["id"])
                z.append(float(row["z"]))
                if has_stratum:
                    strata.append(row["stratum"])
                for name in var_names:
                    variables[name].append(float(row[name]))
        return cls(
            ids=tuple(ids),
            z=np.asarray(z),
            variables={k: np.asarray(v) for k, v in variables.items()},
            strata=tuple(strata) if has_stratum else None,
        )


@dataclass(frozen=True)
class Srswor:
    """Simple random sampling without replacement, fixed size n."""

    n: int


@dataclass(frozen=True)
class StratifiedSrswor:
    """Independent SRSWOR inside each stratum; allocations keyed by label."""

    allocations: Mapping


@dataclass(frozen=True)
class GivenProbabilities:
    """Arbitrary first-order probabilities with Poisson-style joints.

    The joint rule pi_kl = pi_k * pi_l is exact only for Poisson sampling;
    flagged as approximate for anything else. Provided for extensibility.
    """

    pi: np.ndarray


class SampleDraw:
    """A realized sample with inclusion-probability accessors."""

    def __init__(self, population: Population, design, indices: np.ndarray,
                 pi_full: np.ndarray):
        self.population = population
        self.design = design
        self.indices = np.asarray(indices, dtype=int)
        self._pi_full = np.asarray(pi_full, dtype=float)
        if np.any(self._pi_full <= 0) or np.any(self._pi_full > 1):
            raise ValueError("inclusion probabilities must lie in (0,1]")

    @property
    def size(self) -> int:
        return self.indices.size

    @property
    def pi(self) -> np.ndarray:
        """First-order probabilities of the sampled units, sample order."""
        return self._pi_full[self.indices]

    def pi_of(self, k) -> float:
        return float(self._pi_full[k])

    @property
    def pi_full(self) -> np.ndarray:
        """First-order probabilities over the whole universe."""
        return self._pi_full

    def sample_values(self, name: str) -> np.ndarray:
        return self.population.variables[name][self.indices]

    @property
    def sample_z(self) -> np.ndarray:
        return self.population.z[self.indices]

    def joint_prob(self, k: int, l: int) -> float:
        """Second-order inclusion probability pi_kl; pi_k on the diagonal."""
        N = self.population.size
        if not (0 <= k < N and 0 <= l < N):
            raise ValueError("unknown unit")
        if k == l:
            return self.pi_of(k)
        d = self.design
        if isinstance(d, Srswor):
            return d.n * (d.n - 1) / (N * (N - 1))
        if isinstance(d, StratifiedSrswor):
            strata = self.population.strata
            if strata[k] == strata[l]:
                h = strata[k]
                Nh = sum(1 for s in strata if s == h)
                nh = self.design.allocations[h]
                return nh * (nh - 1) / (Nh * (Nh - 1))
            return self.pi_of(k) * self.pi_of(l)
        if isinstance(d, GivenProbabilities):
            return self.pi_of(k) * self.pi_of(l)
        raise TypeError(f"unsupported design {type(d).__name__}")

    def joint_matrix(self, indices=None) -> np.ndarray:
        """Matrix of pi_kl over the given unit indices (default: the sample)."""
        idx = self.indices if indices is None else np.asarray(indices, dtype=int)
        N = self.population.size
        pi = self._pi_full[idx]
        d = self.design
        if isinstance(d, Srswor):
            M = np.full((idx.size, idx.size), d.n * (d.n - 1) / (N * (N - 1)))
        elif isinstance(d, StratifiedSrswor):
            strata = np.asarray(self.population.strata, dtype=object)
            labels = strata[idx]
            M = np.outer(pi, pi)
            for h, nh in d.allocations.items():
                Nh = int(np.sum(strata == h))
                mask = labels == h
                if nh > 1:
                    within = nh * (nh - 1) / (Nh * (Nh - 1))
                else:
                    within = 0.0
                M[np.ix_(mask, mask)] = within
        else:
            M = np.outer(pi, pi)
        np.fill_diagonal(M, pi)
        return M


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def replicate_seed(master_seed: int, replicate: int):
    """Derived per-replicate seed; deterministic regardless of scheduling."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(replicate,))


def draw_srswor(population: Population, n: int, rng_seed) -> SampleDraw:
    """Uniform n-subset of U; pi_k = n/N."""
    N = population.size
    if not 1 <= n <= N:
        raise ValueError(f"sample size {n} out of range for N={N}")
    rng = _rng(rng_seed)
    indices = np.sort(rng.choice(N, size=n, replace=False))
    pi_full = np.full(N, n / N)
    return SampleDraw(population, Srswor(n), indices, pi_full)


def draw_stratified(population: Population, allocations: Mapping,
                    rng_seed) -> SampleDraw:
    """Independent SRSWOR inside each stratum; pi_k = n_h / N_h."""
    if population.strata is None:
        raise ValueError("unit without stratum label")
    groups = population.stratum_indices()
    for h in groups:
        if h not in allocations:
            raise ValueError(f"missing stratum allocation for {h!r}")
    rng = _rng(rng_seed)
    N = population.size
    pi_full = np.empty(N)
    chosen = []
    for h, members in sorted(groups.items(), key=lambda kv: str(kv[0])):
        nh = allocations[h]
        Nh = members.size
        if not 1 <= nh <= Nh:
            raise ValueError(f"allocation {nh} out of range for stratum {h!r}")
        pi_full[members] = nh / Nh
        chosen.append(members[rng.choice(Nh, size=nh, replace=False)])
    indices = np.sort(np.concatenate(chosen))
    return SampleDraw(population, StratifiedSrswor(dict(allocations)), indices,
                      pi_full)


def draw(population: Population, design, rng_seed) -> SampleDraw:
    """Dispatch on the design variant."""
    if isinstance(design, Srswor):
        return draw_srswor(population, design.n, rng_seed)
    if isinstance(design, StratifiedSrswor):
        return draw_stratified(population, design.allocations, rng_seed)
    if isinstance(design, GivenProbabilities):
        rng = _rng(rng_seed)
        pi = np.asarray(design.pi, dtype=float)
        indices = np.flatnonzero(rng.random(pi.size) < pi)
        return SampleDraw(population, design, indices, pi)
    raise TypeError(f"unsupported design {type(design).__name__}")
