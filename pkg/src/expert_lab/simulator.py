"""Monte Carlo engines for the expert game and the comb-controlled diffusion.

Randomness is organised in fixed blocks of paths; block ``b`` draws from a
Philox generator keyed by ``SeedSequence(seed, spawn_key=(b,))``. Results
therefore depend only on the seed and the path count, never on how blocks
are scheduled across workers.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import as_state, comb_masks, subset_matrix
from .discrete_game import matching_policy
from .errors import DomainError

BLOCK = 4096
PLAYERS = ("probability-matching", "uniform", "follow-the-leader", "multiplicative-weights")
ADVERSARIES = ("comb", "balanced-comb", "uniform-subset", "fixed-subset")


def default_threads() -> int:
    """Worker count from ``EXPERT_LAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("EXPERT_LAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PlayerStrategy:
    kind: str = "probability-matching"
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in PLAYERS:
            raise DomainError(f"unknown player {self.kind!r}; choose from {PLAYERS}")


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: str = "balanced-comb"
    subset: tuple = ()

    def __post_init__(self):
        if self.kind not in ADVERSARIES:
            raise DomainError(f"unknown adversary {self.kind!r}; choose from {ADVERSARIES}")
        if self.kind == "fixed-subset" and not self.subset:
            raise DomainError("fixed-subset adversary needs a subset")


@dataclass(frozen=True)
class SimConfig:
    """Repeated-game experiment: M rounds, N experts, ``paths`` replicas."""

    M: int
    N: int = 4
    paths: int = 10_000
    seed: int = 0
    T: float = 1.0
    player: PlayerStrategy = field(default_factory=PlayerStrategy)
    adversary: AdversaryStrategy = field(default_factory=AdversaryStrategy)

    def __post_init__(self):
        if self.M < 1 or self.paths < 1:
            raise DomainError("M and paths must be positive")
        if self.N not in (2, 3, 4):
            raise DomainError(f"unsupported N={self.N}")
        if self.T <= 0:
            raise DomainError("T must be positive")
        if any(not 0 <= i < self.N for i in self.adversary.subset):
            raise DomainError("fixed subset index out of range")


@dataclass(frozen=True)
class SdeConfig:
    """Euler-Maruyama run of the comb-controlled diffusion from ``(t, x)``."""

    x: tuple = (0.0, 0.0, 0.0, 0.0)
    t: float = 0.0
    T: float = 1.0
    steps: int = 1000
    paths: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1 or self.paths < 1:
            raise DomainError("steps and paths must be positive")
        if not 0 <= self.t <= self.T:
            raise DomainError("need 0 <= t <= T")
        as_state(self.x)


@dataclass
class SimResult:
    mean: float
    stderr: float
    paths: int
    wall_time: float
    clamps: int = 0
    final_states: np.ndarray | None = field(default=None, repr=False)

    def __iter__(self):
        yield self.mean
        yield self.stderr

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("final_states")
        return d


def _block_generators(seed: int, paths: int):
    nblocks = -(-paths // BLOCK)
    sizes = [min(BLOCK, paths - b * BLOCK) for b in range(nblocks)]
    gens = [np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(b,))))
            for b in range(nblocks)]
    return gens, sizes


def _stats(values: np.ndarray):
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, stderr


class _Matching:
    """Probability matching with one gradient evaluation per distinct state."""

    def __init__(self, N: int, T: float):
        self.policy = matching_policy(N, T)

    @property
    def clamps(self) -> int:
        return self.policy.clamps

    def __call__(self, m: int, M: int, X: np.ndarray) -> np.ndarray:
        order = np.argsort(X, axis=1, kind="stable")
        xs = np.take_along_axis(X, order, axis=1)
        xs = xs - xs[:, :1]
        # integer nodes: a mixed-radix key makes the row-unique a 1-d unique
        base = int(xs.max()) + 1
        key = xs[:, 1:] @ (base ** np.arange(X.shape[1] - 2, -1, -1))
        _, first, inv = np.unique(key, return_index=True, return_inverse=True)
        g = self.policy(m, M, xs[first])
        out = np.empty(X.shape)
        np.put_along_axis(out, order, g[inv.reshape(-1)], axis=1)
        return out


def _player_probs(player: PlayerStrategy, state, m: int, M: int, X: np.ndarray, N: int):
    P = X.shape[0]
    if player.kind == "uniform":
        return np.full((P, N), 1.0 / N)
    if player.kind == "follow-the-leader":
        lead = np.argsort(X, axis=1, kind="stable")[:, -1]
        out = np.zeros((P, N))
        out[np.arange(P), lead] = 1.0
        return out
    if player.kind == "multiplicative-weights":
        eta = player.eta if player.eta is not None else np.sqrt(8.0 * np.log(N) / M)
        w = np.exp(eta * (X - X.max(1, keepdims=True)))
        return w / w.sum(1, keepdims=True)
    return state(m, M, X)


def _adversary_subsets(adv: AdversaryStrategy, X: np.ndarray, u: np.ndarray, N: int):
    if adv.kind in ("comb", "balanced-comb"):
        C = comb_masks(X)
        if adv.kind == "balanced-comb":
            C = np.where((u < 0.5)[:, None], C, ~C)
        return C
    if adv.kind == "uniform-subset":
        masks = np.minimum((u * (1 << N)).astype(int), (1 << N) - 1)
        return subset_matrix(N)[masks].astype(bool)
    J = np.zeros(N, dtype=bool)
    J[list(adv.subset)] = True
    return np.broadcast_to(J, X.shape)


def estimate_regret(cfg: SimConfig, keep_states: bool = False) -> SimResult:
    """Monte Carlo estimate of the expected regret ``E[max X_M]``.

    Paths evolve in lockstep; within a round the player mixture of every
    distinct state is computed once.

    Returns
    -------
    SimResult
        Iterates as ``(mean, stderr)``.
    """
    start = time.perf_counter()
    N, M = cfg.N, cfg.M
    if cfg.player.kind == "probability-matching" and N not in (3, 4):
        raise DomainError("probability matching is available for N in (3, 4)")
    if cfg.adversary.kind in ("comb", "balanced-comb") and N not in (3, 4):
        raise DomainError("the comb adversary is defined for N in (3, 4)")
    gens, sizes = _block_generators(cfg.seed, cfg.paths)
    X = np.zeros((cfg.paths, N), dtype=np.int64)
    rows = np.arange(cfg.paths)
    matcher = _Matching(N, cfg.T) if cfg.player.kind == "probability-matching" else None
    for m in range(M):
        u = np.concatenate([g.random((s, 2)) for g, s in zip(gens, sizes)])
        try:
            p = _player_probs(cfg.player, matcher, m, M, X, N)
        except Exception as exc:
            raise type(exc)(f"round {m}: {exc}") from exc
        J = _adversary_subsets(cfg.adversary, X, u[:, 0], N)
        I = np.minimum((u[:, 1:2] >= np.cumsum(p, axis=1)).sum(1), N - 1)
        X += J.astype(np.int64) - J[rows, I].astype(np.int64)[:, None]
    mean, stderr = _stats(X.max(1).astype(float))
    return SimResult(mean, stderr, cfg.paths, time.perf_counter() - start,
                     matcher.clamps if matcher else 0, X if keep_states else None)


def _sde_block(gen, size, x0, steps, dt):
    X = np.tile(x0, (size, 1))
    sq = np.sqrt(dt)
    for _ in range(steps):
        z = gen.standard_normal(size) * sq
        X += comb_masks(X) * z[:, None]
    return X.max(1)


def sde_feynman_kac(cfg: SdeConfig, threads: int | None = None) -> SimResult:
    """Euler-Maruyama estimate of ``E[max X_T]`` for the comb-controlled SDE.

    At each step the two comb coordinates move together by one shared
    Gaussian increment.
    """
    start = time.perf_counter()
    x0 = as_state(cfg.x)
    if x0.size not in (3, 4):
        raise DomainError("the comb control is defined for N in (3, 4)")
    if cfg.t == cfg.T:
        return SimResult(float(x0.max()), 0.0, cfg.paths, 0.0)
    dt = (cfg.T - cfg.t) / cfg.steps
    gens, sizes = _block_generators(cfg.seed, cfg.paths)
    threads = default_threads() if threads is None else max(1, int(threads))
    job = lambda gs: _sde_block(gs[0], gs[1], x0, cfg.steps, dt)
    if threads == 1:
        parts = [job(gs) for gs in zip(gens, sizes)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(job, zip(gens, sizes)))
    mean, stderr = _stats(np.concatenate(parts))
    return SimResult(mean, stderr, cfg.paths, time.perf_counter() - start)


def regret_curve(template: SimConfig, Ms) -> list:
    """Rows ``(M, mean/sqrt(M), stderr/sqrt(M))`` for a list of horizons."""
    rows = []
    for M in Ms:
        cfg = SimConfig(M=int(M), N=template.N, paths=template.paths, seed=template.seed,
                        T=template.T, player=template.player, adversary=template.adversary)
        res = estimate_regret(cfg)
        rows.append((int(M), res.mean / np.sqrt(M), res.stderr / np.sqrt(M)))
    return rows
