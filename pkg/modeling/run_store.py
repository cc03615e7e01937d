import asyncio
import json
import logging
from io import StringIO
from pathlib import Path
from typing import Union

import aiofiles
import numpy as np
import pandas as pd

from errors import UsageError
from modeling.models import LdaConfig, RunSet


class RunStore:
    """
    Stores a RunSet as one CSV file per run plus a JSON sidecar.

    The CSV holds the word in its first column and the counts of topics
    ``topic_1`` to ``topic_K`` in the remaining columns. The sidecar records
    the parameters needed to reproduce the run.
    """

    SIDECAR_KEYS = ["K", "alpha", "beta", "iterations", "seed"]

    @staticmethod
    def run_name(run_index: int):
        return f"run_{run_index + 1:03d}"

    @staticmethod
    def counts_frame(run: np.ndarray, vocabulary):
        frame = pd.DataFrame(run, columns=[f"topic_{k + 1}" for k in range(run.shape[1])])
        frame.insert(0, "word", vocabulary)
        return frame

    @staticmethod
    async def write_runset(runset: RunSet, directory: Union[str, Path], corpus_hash: str):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        await asyncio.gather(*(
            RunStore.write_run(runset, index, directory, corpus_hash) for index in range(runset.R)
        ))
        logging.info(f"Wrote {runset.R} runs to {directory}")

    @staticmethod
    async def write_run(runset: RunSet, index: int, directory: Path, corpus_hash: str):
        name = RunStore.run_name(index)
        cfg = runset.configs[index]
        sidecar = {
            "K": cfg.K,
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "iterations": cfg.iterations,
            "seed": runset.seeds[index],
            "corpus_hash": corpus_hash,
            "run_index": index,
        }

        await RunStore.write_counts(runset.runs[index], runset.vocabulary, directory / f"{name}.csv")
        async with aiofiles.open(directory / f"{name}.json", "w", encoding="utf-8") as file:
            await file.write(json.dumps(sidecar, indent=2, sort_keys=True))

    @staticmethod
    async def write_counts(run: np.ndarray, vocabulary, path: Union[str, Path]):
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as file:
            await file.write(RunStore.counts_frame(run, vocabulary).to_csv(index=False))

    @staticmethod
    async def read_runset(directory: Union[str, Path]):
        directory = Path(directory)
        if not directory.is_dir():
            raise UsageError(f"Run directory not found: {directory}")

        paths = sorted(directory.glob("run_*.csv"))
        if len(paths) == 0:
            raise UsageError(f"No run_*.csv files in {directory}")

        loaded = await asyncio.gather(*(RunStore.__read_run(path) for path in paths))

        vocabulary = loaded[0][0]
        hashes = set()
        runs = []
        configs = []
        seeds = []
        for path, (words, counts, sidecar) in zip(paths, loaded):
            if words != vocabulary:
                raise UsageError(f"{path.name} uses a different vocabulary than {paths[0].name}")

            runs.append(counts)
            configs.append(LdaConfig(
                K=sidecar["K"],
                alpha=sidecar["alpha"],
                beta=sidecar["beta"],
                iterations=sidecar["iterations"],
                seed=sidecar["seed"],
            ))
            seeds.append(sidecar["seed"])
            hashes.add(sidecar.get("corpus_hash"))

        if len(hashes) > 1:
            logging.warning(f"Runs in {directory} were fitted on {len(hashes)} different corpora")

        logging.info(f"Read {len(runs)} runs from {directory}")
        return RunSet(runs=runs, vocabulary=vocabulary, configs=configs, seeds=seeds)

    @staticmethod
    async def __read_run(path: Path):
        sidecar_path = path.with_suffix(".json")
        if not sidecar_path.is_file():
            raise UsageError(f"Missing sidecar {sidecar_path.name} for {path.name}")

        try:
            async with aiofiles.open(path, "r", encoding="utf-8", newline="") as file:
                frame = pd.read_csv(StringIO(await file.read()), dtype={"word": str}, keep_default_na=False)
            words = frame["word"].tolist()
            counts = frame.drop(columns=["word"]).to_numpy(dtype=np.int64)
        except (UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError, KeyError, ValueError) as e:
            raise UsageError(f"{path.name}: not a run count table ({e})")

        try:
            async with aiofiles.open(sidecar_path, "r", encoding="utf-8") as file:
                sidecar = json.loads(await file.read())
            missing = [key for key in RunStore.SIDECAR_KEYS if key not in sidecar]
        except (UnicodeDecodeError, json.JSONDecodeError, TypeError) as e:
            raise UsageError(f"{sidecar_path.name}: invalid sidecar ({e})")

        if len(missing) > 0:
            raise UsageError(f"{sidecar_path.name}: missing {', '.join(missing)}")

        return words, counts, sidecar
