import asyncio
import concurrent.futures
import functools
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from errors import ComputationError
from modeling.lda_gibbs import derive_seeds
from modeling.models import RunSet
from stability.models import (
    Measure,
    ModelMeasure,
    PrototypeResult,
    StudyResult,
    StudySample,
    ThresholdConfig,
)
from stability.sclop import sclop_pairwise
from stability.similarity import matched_share

RECOMMENDED_REPLICATIONS = 50


def model_similarity(run_a: np.ndarray,
                     run_b: np.ndarray,
                     cfg: ThresholdConfig,
                     measure: Measure = Measure.MODIFIED_JACCARD,
                     model_measure: ModelMeasure = ModelMeasure.SCLOP,
                     n_top: int = 5):
    """Similarity of two whole runs."""
    if ModelMeasure(model_measure) == ModelMeasure.MATCHED_SHARE:
        return matched_share(run_a, run_b)

    return sclop_pairwise(run_a, run_b, cfg, measure, n_top)


def select_prototype(pairwise: np.ndarray):
    """
    Picks the run with the highest mean similarity to all other runs.

    The diagonal is ignored; ties go to the lowest run index.
    """
    R = pairwise.shape[0]
    if R < 2:
        raise ComputationError(f"R ≥ 2 required, got {R} run")

    off_diagonal = ~np.eye(R, dtype=bool)
    means = np.where(off_diagonal, pairwise, 0.0).sum(axis=1) / (R - 1)

    best = np.flatnonzero(means == means.max())
    prototype_index = int(best[0])
    tie_note = None
    if len(best) > 1:
        tie_note = (
            f"Runs {', '.join(str(r + 1) for r in best)} share the highest mean similarity; "
            f"chose run {prototype_index + 1}"
        )
        logging.info(tie_note)

    return PrototypeResult(
        pairwise=pairwise,
        mean_similarity=means,
        prototype_index=prototype_index,
        ranking=sorted(range(R), key=lambda r: (-means[r], r)),
        tie_note=tie_note,
    )


def _pairs(R: int):
    return [(a, b) for a in range(R) for b in range(a + 1, R)]


def _assemble(R: int, pairs: List[Tuple[int, int]], scores: Sequence[float]):
    pairwise = np.eye(R)
    for (a, b), score in zip(pairs, scores):
        pairwise[a, b] = pairwise[b, a] = score

    return pairwise


def pairwise_model_similarity(runset: RunSet,
                              cfg: ThresholdConfig,
                              measure: Measure = Measure.MODIFIED_JACCARD,
                              model_measure: ModelMeasure = ModelMeasure.SCLOP,
                              n_top: int = 5):
    """R×R matrix of run similarities with unit diagonal."""
    pairs = _pairs(runset.R)
    scores = [
        model_similarity(runset.runs[a], runset.runs[b], cfg, measure, model_measure, n_top)
        for a, b in pairs
    ]
    return _assemble(runset.R, pairs, scores)


def mean_similarity_matrix(runset: RunSet,
                           cfg: ThresholdConfig,
                           measure: Measure = Measure.MODIFIED_JACCARD,
                           model_measure: ModelMeasure = ModelMeasure.SCLOP,
                           n_top: int = 5):
    """
    Compares all pairs of runs and selects the prototype.
    :return: The PrototypeResult.
    """
    if runset.R < 2:
        raise ComputationError(f"R ≥ 2 required, got {runset.R} run")

    logging.info(f"Comparing {runset.R * (runset.R - 1) // 2} pairs of runs")
    return select_prototype(pairwise_model_similarity(runset, cfg, measure, model_measure, n_top))


async def mean_similarity_matrix_async(runset: RunSet,
                                       cfg: ThresholdConfig,
                                       executor: concurrent.futures.Executor,
                                       measure: Measure = Measure.MODIFIED_JACCARD,
                                       model_measure: ModelMeasure = ModelMeasure.SCLOP,
                                       n_top: int = 5):
    """Like :func:`mean_similarity_matrix`, but compares the pairs on ``executor``."""
    if runset.R < 2:
        raise ComputationError(f"R ≥ 2 required, got {runset.R} run")

    pairs = _pairs(runset.R)
    loop = asyncio.get_event_loop()

    logging.info(f"Comparing {len(pairs)} pairs of runs")
    scores = await asyncio.gather(*(
        loop.run_in_executor(
            executor,
            functools.partial(
                model_similarity, runset.runs[a], runset.runs[b], cfg, measure, model_measure, n_top
            ),
        )
        for a, b in pairs
    ))

    return select_prototype(_assemble(runset.R, pairs, scores))


def subsample_study(sets: List[RunSet],
                    sizes: List[int],
                    seed: int,
                    cfg: ThresholdConfig,
                    measure: Measure = Measure.MODIFIED_JACCARD,
                    model_measure: ModelMeasure = ModelMeasure.SCLOP,
                    n_top: int = 5):
    """
    Measures how much choosing a prototype from more runs improves its reliability.

    For every subsample size and every set, ``size`` runs are drawn without
    replacement and the prototype among them is chosen. The raw samples are
    the mean similarities of the drawn runs within their subsample; the
    prototype samples are the mean similarities of each set's prototype to
    the prototypes of all other sets.
    :param sets: Run sets fitted on the same corpus.
    :param sizes: Subsample sizes, each between 2 and the number of runs per set.
    :param seed: Seed of the subsample draws.
    """
    if len(sets) < 2:
        raise ComputationError("The study needs at least two run sets")

    vocabulary = sets[0].vocabulary
    if any(runset.vocabulary != vocabulary or runset.K != sets[0].K for runset in sets):
        raise ComputationError("All run sets must share vocabulary and K")

    for size in sizes:
        if size < 2 or any(size > runset.R for runset in sets):
            raise ComputationError(f"Subsample size {size} must lie between 2 and the runs per set")

    def similarity(run_a, run_b):
        return model_similarity(run_a, run_b, cfg, measure, model_measure, n_top)

    full = []
    for index, runset in enumerate(sets):
        logging.info(f"Comparing runs of set {index + 1}/{len(sets)}")
        full.append(pairwise_model_similarity(runset, cfg, measure, model_measure, n_top))

    cross: Dict[Tuple[int, int, int, int], float] = {}
    draw_seeds = derive_seeds(seed, len(sizes) * len(sets))

    samples = []
    prototype_indices = {}
    for size_index, size in enumerate(sizes):
        chosen = []
        for set_index, runset in enumerate(sets):
            rng = np.random.Generator(np.random.PCG64(draw_seeds[size_index * len(sets) + set_index]))
            drawn = np.sort(rng.choice(runset.R, size=size, replace=False))

            result = select_prototype(full[set_index][np.ix_(drawn, drawn)])
            chosen.append(int(drawn[result.prototype_index]))
            samples.extend(
                StudySample(set=set_index, size=size, kind="raw", value=float(value), run=int(run))
                for run, value in zip(drawn, result.mean_similarity)
            )

        prototype_indices[size] = chosen

        pairwise = np.eye(len(sets))
        for s, t in _pairs(len(sets)):
            key = (s, chosen[s], t, chosen[t])
            if key not in cross:
                cross[key] = similarity(sets[s].runs[chosen[s]], sets[t].runs[chosen[t]])
            pairwise[s, t] = pairwise[t, s] = cross[key]

        means = select_prototype(pairwise).mean_similarity
        samples.extend(
            StudySample(set=set_index, size=size, kind="prototype", value=float(value), run=chosen[set_index])
            for set_index, value in enumerate(means)
        )
        logging.info(f"Subsample size {size}: mean prototype similarity {means.mean():.4f}")

    return StudyResult(sizes=list(sizes), prototype_indices=prototype_indices, samples=samples)
