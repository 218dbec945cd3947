"""CMA-ES search over a reduced latent space, and end-to-end target recovery.

The optimizer is a standard (mu/mu_w, lambda) evolution strategy with
cumulative step-size adaptation and rank-1 plus rank-mu covariance updates.
It maximizes the objective; internally candidates are ranked by negated
score.  Box constraints are handled by clamping sampled candidates to the
bounds before evaluation; the clamped points also drive the distribution
update, so the search mass stays inside the box.

recover_target wires the optimizer to the scoring machinery: the search runs
in PCA-reduced latent coordinates, each candidate is lifted back to a full
latent point, and its score is computed against PCA-reduced responses.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import StimulusResponseDataset
from .latent import LatentPoint, similarity
from .pca import PcaModel, pca_inverse, pca_transform
from .scoring import HypothesisScorer, ScoreConfig
from ._util import derive_rng

__all__ = [
    "CmaConfig",
    "EvalRecord",
    "GenRecord",
    "OptimizationTrace",
    "cmaes_maximize",
    "recover_target",
    "trace_summary",
    "trace_to_jsonl",
]

SIGMA_STOP = 1e-10
BUDGET_MODES = ("evaluations", "generations")


@dataclass(frozen=True)
class CmaConfig:
    """Search-space geometry and budget for one optimizer run.

    bounds are per-coordinate; scalars broadcast.  population_size defaults
    to 4 + floor(3 ln dim) and sigma0 to one third of the mean bound
    half-width.  max_evaluations counts objective calls, or generations when
    budget_mode is "generations".
    """

    dim: int
    bounds_lo: float | np.ndarray = -15.0
    bounds_hi: float | np.ndarray = 15.0
    population_size: int | None = None
    sigma0: float | None = None
    max_evaluations: int = 1000
    seed: int = 0
    budget_mode: str = "evaluations"
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        lo = np.broadcast_to(np.asarray(self.bounds_lo, dtype=np.float64), (self.dim,)).copy()
        hi = np.broadcast_to(np.asarray(self.bounds_hi, dtype=np.float64), (self.dim,)).copy()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("bounds_lo must be strictly below bounds_hi")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "bounds_lo", lo)
        object.__setattr__(self, "bounds_hi", hi)
        if self.population_size is not None and self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.sigma0 is not None and not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")
        if self.budget_mode not in BUDGET_MODES:
            raise ValueError(f"budget_mode must be one of {BUDGET_MODES}")
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=np.float64).copy()
            if x0.shape != (self.dim,) or not np.all(np.isfinite(x0)):
                raise ValueError("x0 must be a finite vector of length dim")
            x0.setflags(write=False)
            object.__setattr__(self, "x0", x0)

    @property
    def effective_population_size(self) -> int:
        if self.population_size is not None:
            return self.population_size
        return 4 + int(math.floor(3.0 * math.log(self.dim)))

    @property
    def effective_sigma0(self) -> float:
        if self.sigma0 is not None:
            return self.sigma0
        return float(np.mean((self.bounds_hi - self.bounds_lo) / 2.0)) / 3.0

    @property
    def effective_x0(self) -> np.ndarray:
        if self.x0 is not None:
            return np.array(self.x0)
        return (self.bounds_lo + self.bounds_hi) / 2.0


@dataclass(frozen=True)
class EvalRecord:
    index: int
    point: np.ndarray  # clamped candidate, reduced coordinates
    score: float
    distance: float | None  # candidate-to-target distance when truth is known
    nonfinite: bool


@dataclass(frozen=True)
class GenRecord:
    index: int
    sigma: float
    min_eig: float
    max_eig: float


@dataclass(eq=False)
class OptimizationTrace:
    evaluations: list[EvalRecord] = field(default_factory=list)
    generations: list[GenRecord] = field(default_factory=list)
    best_point: np.ndarray | None = None
    best_score: float = -np.inf
    seeds: dict = field(default_factory=dict)

    def record(self, point: np.ndarray, score: float, distance: float | None):
        finite = math.isfinite(score)
        self.evaluations.append(
            EvalRecord(
                index=len(self.evaluations),
                point=np.array(point),
                score=float(score),
                distance=None if distance is None else float(distance),
                nonfinite=not finite,
            )
        )
        if finite and score > self.best_score:
            self.best_score = float(score)
            self.best_point = np.array(point)


def trace_to_jsonl(trace: OptimizationTrace) -> str:
    lines = []
    for ev in trace.evaluations:
        lines.append(
            json.dumps(
                {
                    "index": ev.index,
                    "point": [float(v) for v in ev.point],
                    "score": ev.score,
                    "distance": ev.distance,
                    "nonfinite": ev.nonfinite,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def trace_summary(trace: OptimizationTrace) -> dict:
    return {
        "evaluations": len(trace.evaluations),
        "generations": len(trace.generations),
        "best_score": None if trace.best_point is None else trace.best_score,
        "best_point": None if trace.best_point is None else [float(v) for v in trace.best_point],
        "best_distance": next(
            (
                ev.distance
                for ev in trace.evaluations
                if trace.best_point is not None
                and not ev.nonfinite
                and ev.score == trace.best_score
            ),
            None,
        ),
        "final_sigma": trace.generations[-1].sigma if trace.generations else None,
        "seeds": dict(trace.seeds),
    }


def cmaes_maximize(objective, cfg: CmaConfig, distance_fn=None) -> OptimizationTrace:
    """Run CMA-ES and return the full trace.

    objective maps a length-dim vector to a scalar score (higher is better);
    nonfinite returns are flagged and treated as worst-in-generation rather
    than aborting the run.  distance_fn, when given, is evaluated on every
    candidate for the trace only and never influences the search.
    """
    n = cfg.dim
    lam = cfg.effective_population_size
    mu = lam // 2
    raw_w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw_w / raw_w.sum()
    mueff = 1.0 / np.sum(weights**2)

    cs = (mueff + 2.0) / (n + mueff + 5.0)
    damps = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs
    cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n)
    c1 = 2.0 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) ** 2 + mueff))
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))

    rng = derive_rng(cfg.seed, "cma-es")
    mean = cfg.effective_x0
    sigma = cfg.effective_sigma0
    cov = np.eye(n)
    ps = np.zeros(n)
    pc = np.zeros(n)

    trace = OptimizationTrace(
        seeds={
            "seed": cfg.seed,
            "population_size": lam,
            "sigma0": sigma,
            "budget_mode": cfg.budget_mode,
            "max_evaluations": cfg.max_evaluations,
        }
    )

    by_generations = cfg.budget_mode == "generations"
    gen = 0
    while True:
        if by_generations:
            if gen >= cfg.max_evaluations:
                break
        elif len(trace.evaluations) >= cfg.max_evaluations:
            break
        if sigma < SIGMA_STOP:
            break

        # eigendecomposition once per generation; also the SPD health check
        cov = (cov + cov.T) / 2.0
        eigvals, basis = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, 1e-20)
        scales = np.sqrt(eigvals)
        trace.generations.append(
            GenRecord(index=gen, sigma=float(sigma), min_eig=float(eigvals[0]), max_eig=float(eigvals[-1]))
        )

        room = lam if by_generations else min(lam, cfg.max_evaluations - len(trace.evaluations))
        z = rng.standard_normal((lam, n))
        steps = (z * scales) @ basis.T
        cands = np.clip(mean + sigma * steps, cfg.bounds_lo, cfg.bounds_hi)

        losses = np.full(lam, np.inf)
        for i in range(room):
            score = float(objective(cands[i]))
            dist = None if distance_fn is None else float(distance_fn(cands[i]))
            trace.record(cands[i], score, dist)
            if math.isfinite(score):
                losses[i] = -score

        if room < lam:
            break  # budget exhausted mid-generation: no update from a partial ranking
        gen += 1

        order = np.argsort(losses, kind="stable")[:mu]
        y_sel = (cands[order] - mean) / sigma
        y_w = weights @ y_sel

        inv_sqrt = (basis / scales) @ basis.T
        ps = (1.0 - cs) * ps + math.sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt @ y_w)
        hsig = float(
            np.linalg.norm(ps) / math.sqrt(1.0 - (1.0 - cs) ** (2 * gen)) / chi_n
            < 1.4 + 2.0 / (n + 1.0)
        )
        pc = (1.0 - cc) * pc + hsig * math.sqrt(cc * (2.0 - cc) * mueff) * y_w

        c1a = c1 * (1.0 - (1.0 - hsig) * cc * (2.0 - cc))
        cov = (
            (1.0 - c1a - cmu) * cov
            + c1 * np.outer(pc, pc)
            + cmu * (y_sel.T * weights) @ y_sel
        )
        mean = mean + sigma * y_w
        sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1.0))

    return trace


def recover_target(
    ds: StimulusResponseDataset,
    cfg: ScoreConfig,
    cma: CmaConfig,
    pca_e: PcaModel,
    pca_z: PcaModel,
) -> tuple[LatentPoint, OptimizationTrace]:
    """Search the reduced latent space for the point that scores highest.

    Responses are reduced through pca_e once up front; every candidate is
    lifted through pca_z back to full latent coordinates before scoring.
    Returns the recovered point (full coordinates) and the optimizer trace;
    when the dataset carries ground truth, each trace entry also logs the
    candidate's true distance to the hidden target.
    """
    if pca_e.input_dim != ds.response_dim:
        raise ValueError("pca_e dimension does not match dataset responses")
    if pca_z.input_dim != ds.stimulus_dim:
        raise ValueError("pca_z dimension does not match dataset stimuli")
    if cma.dim != pca_z.k:
        raise ValueError("cma.dim must equal pca_z.k")

    reduced = StimulusResponseDataset(
        stimuli=ds.stimuli,
        responses=pca_transform(pca_e, ds.responses),
        truth=ds.truth,
        provenance={**ds.provenance, "responses_reduced_to": pca_e.k},
    )
    scorer = HypothesisScorer(reduced, cfg)

    def objective(y: np.ndarray) -> float:
        return scorer.score_point(pca_inverse(pca_z, y)).score

    distance_fn = None
    if ds.truth is not None:
        target = ds.truth.target

        def distance_fn(y: np.ndarray) -> float:
            return similarity(target, LatentPoint(pca_inverse(pca_z, y)))

    trace = cmaes_maximize(objective, cma, distance_fn)
    if trace.best_point is None:
        raise RuntimeError("optimization produced no finite score")
    return LatentPoint(pca_inverse(pca_z, trace.best_point)), trace
