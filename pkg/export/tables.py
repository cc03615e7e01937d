import asyncio
import json
import logging
from pathlib import Path
from typing import Union

import aiofiles
import numpy as np
import pandas as pd
from pydantic import ValidationError

from errors import UsageError
from export.formatter import topic_name
from stability.dendrogram import Dendrogram
from stability.models import PrototypeResult, SclopReport, SimilarityMatrix, StudyResult, ThresholdConfig
from stability.sclop import SclopAnalysis


class ArtifactStore:
    """
    Writes analysis results as CSV tables and JSON documents, and reads back
    what the ``export`` command needs to re-render an analysis.
    """

    REPORT = "report.json"
    DENDROGRAM = "dendrogram.json"
    SIMILARITY = "similarity.csv"
    SIMILARITY_SIDECAR = "similarity.json"

    @staticmethod
    def similarity_frame(similarity: SimilarityMatrix):
        names = [topic_name(label) for label in similarity.labels]
        return pd.DataFrame(similarity.values, index=names, columns=names)

    @staticmethod
    def pairwise_frame(pairwise: np.ndarray):
        names = [f"run_{r + 1:03d}" for r in range(pairwise.shape[0])]
        return pd.DataFrame(pairwise, index=names, columns=names)

    @staticmethod
    def means_frame(result: PrototypeResult):
        rank = np.empty(len(result.ranking), dtype=np.int64)
        rank[result.ranking] = np.arange(1, len(result.ranking) + 1)
        return pd.DataFrame({
            "run": np.arange(1, len(result.mean_similarity) + 1),
            "mean_similarity": result.mean_similarity,
            "rank": rank,
            "prototype": np.arange(len(result.mean_similarity)) == result.prototype_index,
        })

    @staticmethod
    def study_frame(result: StudyResult):
        """Long format: one row per sample with 1-based set numbers."""
        return pd.DataFrame(
            [(sample.set + 1, sample.size, sample.kind, sample.value) for sample in result.samples],
            columns=["set", "size", "kind", "value"],
        )

    @staticmethod
    async def write_frame(frame: pd.DataFrame, path: Union[str, Path], index: bool = False):
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as file:
            await file.write(frame.to_csv(index=index))

    @staticmethod
    async def write_json(data, path: Union[str, Path]):
        async with aiofiles.open(path, "w", encoding="utf-8") as file:
            await file.write(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))

    @staticmethod
    async def write_text(text: str, path: Union[str, Path]):
        async with aiofiles.open(path, "w", encoding="utf-8") as file:
            await file.write(text)

    @staticmethod
    async def read_json(path: Union[str, Path]):
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"File not found: {path}")

        async with aiofiles.open(path, "r", encoding="utf-8") as file:
            try:
                return json.loads(await file.read())
            except (json.JSONDecodeError, UnicodeDecodeError) as e:
                raise UsageError(f"{path}: invalid JSON ({e})")

    @staticmethod
    async def write_analysis(analysis: SclopAnalysis, directory: Union[str, Path], cfg: ThresholdConfig):
        """Writes the report, dendrogram and similarity matrix of an S-CLOP analysis."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        similarity = analysis.similarity
        sidecar = {
            "measure": similarity.measure.value,
            "threshold": json.loads(cfg.json()),
            "n": similarity.n,
            "degenerate_pairs": [
                [topic_name(similarity.labels[i]), topic_name(similarity.labels[j])]
                for i, j in similarity.degenerate_pairs
            ],
        }

        await asyncio.gather(
            ArtifactStore.write_json(json.loads(analysis.report.json()), directory / ArtifactStore.REPORT),
            ArtifactStore.write_json(json.loads(analysis.dendrogram.json()), directory / ArtifactStore.DENDROGRAM),
            ArtifactStore.write_frame(
                ArtifactStore.similarity_frame(similarity), directory / ArtifactStore.SIMILARITY, index=True
            ),
            ArtifactStore.write_json(sidecar, directory / ArtifactStore.SIMILARITY_SIDECAR),
        )
        logging.info(f"Wrote analysis to {directory}")

    @staticmethod
    async def read_analysis(directory: Union[str, Path]):
        """
        Reads back a saved analysis.
        :return: A tuple containing the dendrogram and the report.
        """
        directory = Path(directory)
        report_data, dendrogram_data = await asyncio.gather(
            ArtifactStore.read_json(directory / ArtifactStore.REPORT),
            ArtifactStore.read_json(directory / ArtifactStore.DENDROGRAM),
        )

        try:
            return Dendrogram.parse_obj(dendrogram_data), SclopReport.parse_obj(report_data)
        except ValidationError as e:
            raise UsageError(f"{directory}: invalid analysis files ({e})")
