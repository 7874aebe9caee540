"""Random channel ensembles.

Haar-random states and unitaries, the single-basis rotation channels used as
worst-case instances, and two eigenangle ensembles supported on the arc
[-s/2, s/2] with both endpoints attained:

* the arc-confined CUE ensemble whose eigenangle density is proportional to
  the squared Vandermonde factor prod_{k<l} |e^{i th_k} - e^{i th_l}|^2, and
* a uniform comparison ensemble whose interior angles are i.i.d. uniform.

Here s = 2*arcsin(epsilon/2), so every sample sits at diamond distance
exactly epsilon from the identity channel.

The arc-confined CUE ensemble is sampled by three interchangeable methods
that cross-validate each other: exact inverse-CDF integration at d = 3, plain
rejection against the uniform proposal for d <= 5 (the acceptance rate decays
super-exponentially with d, so the cutoff is hard), and a single-site
Metropolis walk on the log-gas density for any d.  The Metropolis engine is
vectorized across chains and across independently seeded replicas so that
large batches (hundreds of channels at d = 256) run as one array program
while each replica's output remains a pure function of its own seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .linalg import EigenangleSet, assert_state

REJECTION_MAX_D = 5
MCMC_RHAT_THRESHOLD = 1.05
_MCMC_DIAG_SAMPLES = 50      # per-chain statistic draws used for the R-hat gate
_MCMC_BLOCK_STEPS = 2048     # random numbers are drawn in blocks of this many steps
_MCMC_MAX_EXTENSIONS = 3     # extra burn-in rounds allowed before giving up

ANGLE_CSV_HEADER = ["kind", "d", "epsilon", "seed", "index", "angle"]


class McmcDiagnosticError(RuntimeError):
    """Raised when the Gelman-Rubin gate fails after all chain extensions."""

    def __init__(self, rhat: float, replica: int | None = None):
        self.rhat = rhat
        self.replica = replica
        where = "" if replica is None else f" (replica {replica})"
        super().__init__(f"MCMC convergence gate failed{where}: R-hat = {rhat:.4f}")


@dataclass(frozen=True)
class PerturbationParams:
    """Perturbation strength: diamond distance epsilon and arc length s."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 2.0:
            raise ValueError(f"epsilon must lie in [0, 2), got {self.epsilon}")

    @property
    def s(self) -> float:
        return 2.0 * np.arcsin(self.epsilon / 2.0)


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for the arc-confined CUE samplers.

    ``method`` is one of "exact_d3", "rejection", "mcmc" or None (auto: exact
    at d = 3, rejection for d <= 5, MCMC above).  The MCMC fields default to
    burn_in = 5000*d single-site steps, thinning = 50*d, step_scale = s/8 and
    4 chains; one "step" proposes a move of a single interior angle.
    """

    method: str | None = None
    mcmc_burn_in: int | None = None
    mcmc_thinning: int | None = None
    mcmc_step_scale: float | None = None
    chains: int = 4
    seed: int | None = None

    def __post_init__(self):
        if self.method not in (None, "exact_d3", "rejection", "mcmc"):
            raise ValueError(f"unknown sampler method {self.method!r}")
        if self.mcmc_burn_in is not None and self.mcmc_burn_in < 0:
            raise ValueError("mcmc_burn_in must be >= 0")
        if self.mcmc_thinning is not None and self.mcmc_thinning < 1:
            raise ValueError("mcmc_thinning must be >= 1")
        if self.mcmc_step_scale is not None and self.mcmc_step_scale <= 0:
            raise ValueError("mcmc_step_scale must be > 0")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")

    def resolved(self, d: int, s: float) -> "SamplerConfig":
        """Fill in d- and s-dependent defaults."""
        method = self.method
        if method is None:
            method = "exact_d3" if d == 3 else ("rejection" if d <= REJECTION_MAX_D else "mcmc")
        return replace(
            self,
            method=method,
            mcmc_burn_in=5000 * d if self.mcmc_burn_in is None else self.mcmc_burn_in,
            mcmc_thinning=50 * d if self.mcmc_thinning is None else self.mcmc_thinning,
            mcmc_step_scale=s / 8.0 if self.mcmc_step_scale is None else self.mcmc_step_scale,
        )


def _as_rng(rng, cfg: SamplerConfig | None = None) -> np.random.Generator:
    if rng is None:
        return np.random.default_rng(None if cfg is None else cfg.seed)
    return np.random.default_rng(rng)


def haar_state(d: int, rng=None) -> np.ndarray:
    """Haar-random pure state: normalized vector of i.i.d. complex Gaussians."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    g = _as_rng(rng)
    z = g.normal(size=d) + 1j * g.normal(size=d)
    return z / np.linalg.norm(z)


def haar_states(d: int, n: int, rng=None) -> np.ndarray:
    """n Haar-random states as rows of an (n, d) array."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    g = _as_rng(rng)
    z = g.normal(size=(n, d)) + 1j * g.normal(size=(n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix.

    The phases of the triangular factor's diagonal are divided out, which
    makes the QR map measurable and the output exactly Haar distributed.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    g = _as_rng(rng)
    z = (g.normal(size=(d, d)) + 1j * g.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def single_basis_rotation(d: int, eps: PerturbationParams, psi) -> np.ndarray:
    """U = I + (e^{is} - 1)|psi><psi|: phase s on one basis state, identity elsewhere."""
    v = assert_state(psi)
    if v.size != d:
        raise ValueError(f"state of dimension {v.size} does not match d = {d}")
    return np.eye(d, dtype=complex) + (np.exp(1j * eps.s) - 1.0) * np.outer(v, v.conj())


def log_weight(angles, s: float) -> float:
    """Log of the unnormalized arc-confined CUE density at the given angles.

    Returns sum_{k<l} 2*ln|e^{i th_k} - e^{i th_l}|; -inf on coincident
    angles.  All angles must lie in [-s/2, s/2].
    """
    a = np.asarray(angles, dtype=float).reshape(-1)
    half = s / 2.0
    if np.any(np.abs(a) > half + 1e-12):
        raise ValueError(f"angles must lie in [-{half!r}, {half!r}]")
    z = np.exp(1j * a)
    diff = np.abs(z[:, None] - z[None, :])
    iu = np.triu_indices(a.size, k=1)
    pair = diff[iu]
    if np.any(pair == 0.0):
        return -np.inf
    return float(2.0 * np.sum(np.log(pair)))


def _scatter_with_endpoints(interior: np.ndarray, s: float, rng: np.random.Generator) -> np.ndarray:
    """Place -s/2 and s/2 at uniformly random distinct positions of the output."""
    d = interior.size + 2
    out = np.empty(d)
    m = int(rng.integers(d))
    n = int(rng.integers(d - 1))
    if n >= m:
        n += 1
    rest = np.setdiff1d(np.arange(d), [m, n], assume_unique=True)
    out[m] = -s / 2.0
    out[n] = s / 2.0
    out[rest] = interior
    return out


# ---------------------------------------------------------------------------
# uniform comparison ensemble


def eps_uniform_eigenangles(d: int, eps: PerturbationParams, rng=None) -> EigenangleSet:
    """Endpoints at +-s/2 in random positions, interior i.i.d. uniform on the arc."""
    if d < 2:
        raise ValueError("need d >= 2 to pin both endpoints")
    g = _as_rng(rng)
    s = eps.s
    interior = g.uniform(-s / 2.0, s / 2.0, size=d - 2)
    return EigenangleSet(_scatter_with_endpoints(interior, s, g))


def eps_uniform_eigenangles_many(d: int, eps: PerturbationParams, n: int, rng=None) -> np.ndarray:
    """n independent uniform-ensemble samples as rows of an (n, d) array."""
    g = _as_rng(rng)
    return np.stack([eps_uniform_eigenangles(d, eps, g).angles for _ in range(n)])


# ---------------------------------------------------------------------------
# arc-confined CUE: exact inverse CDF at d = 3

_EXACT_D3_GRID = 100_000


def _d3_interior_cdf_grid(s: float) -> tuple[np.ndarray, np.ndarray]:
    """Numeric CDF of the single interior angle at d = 3.

    Density on [-s/2, s/2] is proportional to
    |e^{i th} - e^{i s/2}|^2 |e^{i th} - e^{-i s/2}|^2; the constant
    endpoint-endpoint factor drops out.
    """
    grid = np.linspace(-s / 2.0, s / 2.0, _EXACT_D3_GRID)
    z = np.exp(1j * grid)
    w = (np.abs(z - np.exp(1j * s / 2.0)) * np.abs(z - np.exp(-1j * s / 2.0))) ** 2
    cdf = np.concatenate([[0.0], np.cumsum((w[1:] + w[:-1]) * 0.5 * np.diff(grid))])
    cdf /= cdf[-1]
    return grid, cdf


def _d3_interior_samples(s: float, n: int, rng: np.random.Generator) -> np.ndarray:
    grid, cdf = _d3_interior_cdf_grid(s)
    u = rng.random(n)
    return np.interp(u, cdf, grid)


# ---------------------------------------------------------------------------
# arc-confined CUE: rejection sampling for d <= REJECTION_MAX_D


def _rejection_interior_samples(d: int, s: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Interior angles by rejection against the uniform proposal.

    The unnormalized density (including both pinned endpoints) is bounded by
    M = (2 sin(s/2))^{d(d-1)} since every pair distance on the arc is at most
    the chord 2 sin(s/2); acceptance probability is density / M.
    """
    m = d - 2
    ends = np.exp(1j * np.array([s / 2.0, -s / 2.0]))
    chord = 2.0 * np.sin(s / 2.0)
    out = np.empty((n, m))
    got = 0
    batch = max(1024, 4 * n)
    while got < n:
        theta = rng.uniform(-s / 2.0, s / 2.0, size=(batch, m))
        z = np.exp(1j * theta)
        # ratio of density to its bound, as a product of per-pair ratios <= 1
        ratio = np.ones(batch)
        ratio *= np.prod(np.abs(z[:, :, None] - ends[None, None, :]) ** 2, axis=(1, 2))
        for i in range(m):
            for j in range(i + 1, m):
                ratio *= np.abs(z[:, i] - z[:, j]) ** 2
        n_pairs_used = 2 * m + m * (m - 1) // 2
        ratio /= chord ** (2 * n_pairs_used)
        accept = rng.random(batch) < ratio
        take = min(int(accept.sum()), n - got)
        out[got : got + take] = theta[accept][:take]
        got += take
    return out


# ---------------------------------------------------------------------------
# arc-confined CUE: vectorized single-site Metropolis on the log-gas


def _reflect(x: np.ndarray, half: float) -> np.ndarray:
    """Fold proposals back into [-half, half] (reflecting boundaries)."""
    period = 4.0 * half
    y = np.mod(x + half, period)
    y = np.where(y > 2.0 * half, period - y, y)
    return y - half


class _LogGasWalk:
    """Single-site Metropolis walk for several independently seeded replicas.

    Each replica owns `chains` walkers and a private Generator; every walker
    carries the d-2 interior angles of one log-gas configuration with the
    endpoints pinned at +-s/2.  All walkers advance in lockstep so the update
    is one vectorized array operation, while the random numbers driving a
    replica come only from that replica's stream (drawn in fixed-size blocks,
    which makes each replica's trajectory independent of how many replicas
    run together).
    """

    def __init__(self, d: int, s: float, cfg: SamplerConfig, rngs: list[np.random.Generator]):
        self.d, self.s, self.cfg = d, s, cfg
        self.m = d - 2
        self.half = s / 2.0
        self.rngs = rngs
        self.n_rep = len(rngs)
        self.chains = cfg.chains
        self.W = self.n_rep * self.chains
        init = [g.uniform(-self.half, self.half, size=(self.chains, self.m)) for g in rngs]
        self.theta = np.concatenate(init, axis=0)
        self.z = np.exp(1j * self.theta)
        self.ends = np.exp(1j * np.array([self.half, -self.half]))
        self._rows = np.arange(self.W)

    def _draw_block(self, nsteps: int):
        idx = np.empty((nsteps, self.W), dtype=np.int64)
        prop = np.empty((nsteps, self.W))
        uacc = np.empty((nsteps, self.W))
        for r, g in enumerate(self.rngs):
            cols = slice(r * self.chains, (r + 1) * self.chains)
            idx[:, cols] = g.integers(0, self.m, size=(nsteps, self.chains))
            prop[:, cols] = g.normal(0.0, self.cfg.mcmc_step_scale, size=(nsteps, self.chains))
            uacc[:, cols] = g.random(size=(nsteps, self.chains))
        return idx, prop, uacc

    @staticmethod
    def _abs2(z):
        return z.real * z.real + z.imag * z.imag

    def _step(self, idx, delta, u):
        rows = self._rows
        cur = self.theta[rows, idx]
        new = _reflect(cur + delta, self.half)
        z_cur = self.z[rows, idx]
        z_new = np.exp(1j * new)
        # acceptance ratio as a product of squared chord ratios; the walker's
        # own site is masked out of both products
        d_new = self._abs2(z_new[:, None] - self.z)
        d_cur = self._abs2(z_cur[:, None] - self.z)
        d_new[rows, idx] = 1.0
        d_cur[rows, idx] = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.prod(d_new / d_cur, axis=1)
            for e in self.ends:
                ratio *= self._abs2(z_new - e) / self._abs2(z_cur - e)
        # 0/0 (coincident pair on both sides) counts as a rejection
        ratio = np.nan_to_num(ratio, nan=0.0, posinf=np.inf)
        acc = u < ratio
        self.theta[rows[acc], idx[acc]] = new[acc]
        self.z[rows[acc], idx[acc]] = z_new[acc]

    def run(self, nsteps: int, collect_every: int | None = None, keep_angles: bool = False):
        """Advance nsteps; optionally collect the spread statistic (and angles)."""
        stats, kept = [], []
        done = 0
        while done < nsteps:
            b = min(_MCMC_BLOCK_STEPS, nsteps - done)
            idx, prop, uacc = self._draw_block(b)
            for t in range(b):
                self._step(idx[t], prop[t], uacc[t])
                done += 1
                if collect_every is not None and done % collect_every == 0:
                    stats.append(self.spread_statistic())
                    if keep_angles:
                        kept.append(self.theta.copy())
        return np.array(stats), (np.array(kept) if keep_angles else None)

    def spread_statistic(self) -> np.ndarray:
        """sum_j (theta_j - mean)^2 over the full d-vector, per walker."""
        tot = self.theta.sum(axis=1)  # endpoints sum to zero
        sq = (self.theta**2).sum(axis=1) + 2.0 * self.half**2
        return sq - tot**2 / self.d


def _gelman_rubin(stat: np.ndarray) -> float:
    """Split-free R-hat from an (n_samples, chains) statistic array."""
    n, m = stat.shape
    means = stat.mean(axis=0)
    within = stat.var(axis=0, ddof=1).mean()
    between = n * means.var(ddof=1)
    if within == 0:
        return 1.0
    var_plus = (n - 1) / n * within + between / n
    return float(np.sqrt(var_plus / within))


def _mcmc_interior_samples(
    d: int,
    s: float,
    cfg: SamplerConfig,
    rngs: list[np.random.Generator],
    per_chain_keep: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the walk and return (samples, rhat_per_replica).

    samples has shape (n_replicas, chains, n_keep, d-2): thinned post-burn-in
    states with n_keep >= per_chain_keep.  The Gelman-Rubin gate on the
    spread statistic is evaluated per replica; on failure the burn-in is
    extended (all replicas step together to keep the lockstep layout) and the
    gate is re-tried up to _MCMC_MAX_EXTENSIONS times before raising.
    """
    walk = _LogGasWalk(d, s, cfg, rngs)
    thin = cfg.mcmc_thinning
    walk.run(cfg.mcmc_burn_in)
    n_keep = max(per_chain_keep, _MCMC_DIAG_SAMPLES)
    for attempt in range(_MCMC_MAX_EXTENSIONS + 1):
        stats, kept = walk.run(n_keep * thin, collect_every=thin, keep_angles=True)
        stats = stats.reshape(n_keep, walk.n_rep, cfg.chains)
        rhat = np.array([_gelman_rubin(stats[:, r, :]) for r in range(walk.n_rep)])
        if np.all(rhat < MCMC_RHAT_THRESHOLD):
            break
        if attempt == _MCMC_MAX_EXTENSIONS:
            worst = int(np.argmax(rhat))
            raise McmcDiagnosticError(float(rhat[worst]), replica=worst)
        walk.run(cfg.mcmc_burn_in)  # extend and retry
    # kept: (n_keep, W, m) -> (replica, chain, sample, m)
    kept = kept.reshape(n_keep, walk.n_rep, cfg.chains, walk.m).transpose(1, 2, 0, 3)
    return kept, rhat


# ---------------------------------------------------------------------------
# arc-confined CUE: public API


def _interior_samples(d, s, n, cfg, rng) -> np.ndarray:
    method = cfg.method
    if method == "exact_d3":
        if d != 3:
            raise ValueError("exact_d3 sampler requires d = 3")
        return _d3_interior_samples(s, n, rng)[:, None]
    if method == "rejection":
        if d > REJECTION_MAX_D:
            raise ValueError(
                f"rejection sampler limited to d <= {REJECTION_MAX_D}"
                " (acceptance decays super-exponentially with d)"
            )
        return _rejection_interior_samples(d, s, n, rng)
    # mcmc: thinned draws from one multi-chain run, chains interleaved
    per_chain = -(-n // cfg.chains)
    kept, _ = _mcmc_interior_samples(d, s, cfg, [rng], per_chain)
    # interleave chains so consecutive returned samples come from different chains
    samples = kept[0].transpose(1, 0, 2).reshape(-1, d - 2)
    return samples[:n]


def eps_cue_eigenangles_many(
    d: int, eps: PerturbationParams, n: int, cfg: SamplerConfig | None = None, rng=None
) -> np.ndarray:
    """n arc-confined CUE eigenangle samples as rows of an (n, d) array.

    For the MCMC method the n draws come from one multi-chain run (thinned,
    chains interleaved); for exact_d3/rejection they are i.i.d.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if eps.epsilon <= 0:
        raise ValueError("need epsilon > 0")
    cfg = (cfg or SamplerConfig()).resolved(d, eps.s)
    g = _as_rng(rng, cfg)
    s = eps.s
    if d == 2:
        interior = np.empty((n, 0))
    else:
        interior = _interior_samples(d, s, n, cfg, g)
    return np.stack([_scatter_with_endpoints(row, s, g) for row in interior])


def eps_cue_eigenangles(
    d: int, eps: PerturbationParams, cfg: SamplerConfig | None = None, rng=None
) -> EigenangleSet:
    """One arc-confined CUE eigenangle sample.

    min = -s/2 and max = s/2 exactly; the d-2 interior angles follow the
    squared-Vandermonde density on the arc (exactly for exact_d3/rejection,
    asymptotically for mcmc); endpoint positions are uniformly random.
    """
    return EigenangleSet(eps_cue_eigenangles_many(d, eps, 1, cfg, rng)[0])


def eps_cue_eigenangles_batch(
    d: int, eps: PerturbationParams, seeds, cfg: SamplerConfig | None = None
) -> list[EigenangleSet]:
    """Independent samples, one per seed, equal to eps_cue_eigenangles run per seed.

    The MCMC replicas advance in lockstep as one vectorized walk, but each
    consumes randomness only from its own seed, so results do not depend on
    batch composition or scheduling.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if eps.epsilon <= 0:
        raise ValueError("need epsilon > 0")
    s = eps.s
    cfg = (cfg or SamplerConfig()).resolved(d, s)
    rngs = [np.random.default_rng(sd) for sd in seeds]
    if cfg.method != "mcmc" or d == 2:
        return [EigenangleSet(eps_cue_eigenangles_many(d, eps, 1, cfg, g)[0]) for g in rngs]
    kept, _ = _mcmc_interior_samples(d, s, cfg, rngs, per_chain_keep=1)
    out = []
    for r, g in enumerate(rngs):
        chain = int(g.integers(cfg.chains))
        interior = kept[r, chain, -1]
        out.append(EigenangleSet(_scatter_with_endpoints(interior, s, g)))
    return out


def eps_cue_unitary(
    d: int, eps: PerturbationParams, cfg: SamplerConfig | None = None, rng=None
) -> np.ndarray:
    """Arc-confined CUE unitary: random eigenangles conjugated by a Haar basis."""
    cfg = (cfg or SamplerConfig()).resolved(d, eps.s)
    g = _as_rng(rng, cfg)
    angles = eps_cue_eigenangles(d, eps, cfg, g)
    V = haar_unitary(d, g)
    return (V * np.exp(1j * angles.angles)) @ V.conj().T


# ---------------------------------------------------------------------------
# sample dumps


def write_angle_csv(path, kind: str, d: int, epsilon: float, seed, samples: np.ndarray) -> None:
    """Dump eigenangle samples: one row per angle, sample-major, 17 digits."""
    samples = np.atleast_2d(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANGLE_CSV_HEADER)
        for i, row in enumerate(samples):
            for theta in row:
                w.writerow([kind, d, f"{epsilon:.17g}", seed, i, f"{theta:.17g}"])
