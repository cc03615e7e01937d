import argparse
import asyncio
import logging
import sys
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path

from pydantic import ValidationError

from config import Config
from errors import ComputationError, ConfigurationError, SclopError, UsageError
from export.formatter import FORMATS, ReportFormatter, leaf_names
from export.tables import ArtifactStore
from modeling.corpus import CorpusPreprocessor, CorpusStore
from modeling.lda_gibbs import derive_seeds, replicate_async
from modeling.models import LdaConfig, PreprocessConfig, SyntheticSpec
from modeling.run_store import RunStore
from modeling.synthetic import SyntheticCorpusGenerator
from stability.models import Measure, ModelMeasure, ThresholdConfig, ThresholdMode
from stability.prototype import RECOMMENDED_REPLICATIONS, mean_similarity_matrix_async, subsample_study
from stability.sclop import analyse
from stability.similarity import topic_top_words

EXPORT_FILES = {
    "newick": "dendrogram.nwk",
    "dot": "dendrogram.dot",
    "svg": "dendrogram.svg",
    "summary": "summary.md",
    "details": "details.md",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ldastability",
        description="Stability of replicated LDA runs via S-CLOP, and prototype run selection.",
    )
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers (default: $SCLOP_JOBS or CPU count)")
    commands = parser.add_subparsers(dest="command", required=True)

    preprocess = commands.add_parser("preprocess", help="turn raw documents into a corpus file")
    preprocess.add_argument("input", type=Path, help="directory of .txt files or a JSONL file")
    preprocess.add_argument("-o", "--output", type=Path, default=Path("corpus.json"))
    preprocess.add_argument("--stopwords", type=Path, default=None, help="stopword file (default: bundled English list)")
    preprocess.add_argument("--no-stopwords", action="store_true")
    preprocess.add_argument("--min-count", type=int, default=6)
    preprocess.add_argument("--keep-case", action="store_true")
    preprocess.add_argument("--keep-numbers", action="store_true")
    preprocess.add_argument("--keep-punctuation", action="store_true")
    preprocess.add_argument("--keep-duplicates", action="store_true")

    synth = commands.add_parser("synth", help="generate a corpus with known topic structure")
    synth.add_argument("-o", "--output", type=Path, default=Path("corpus.json"))
    synth.add_argument("--topics", type=int, default=5)
    synth.add_argument("--vocab", type=int, default=200)
    synth.add_argument("--docs", type=int, default=100)
    synth.add_argument("--length", type=int, default=50)
    synth.add_argument("--concentration", type=float, default=0.1)
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)

    fit = commands.add_parser("fit", help="fit replicated LDA runs")
    fit.add_argument("corpus", type=Path)
    fit.add_argument("-o", "--output", type=Path, default=Path("runs"))
    _add_lda_arguments(fit)
    fit.add_argument("--reps", type=int, default=RECOMMENDED_REPLICATIONS)

    sclop = commands.add_parser("sclop", help="compute the S-CLOP score of a run directory")
    sclop.add_argument("runs", type=Path)
    sclop.add_argument("-o", "--output", type=Path, default=None, help="analysis directory (default: RUNS/sclop)")
    _add_similarity_arguments(sclop)
    sclop.add_argument("--export", default="", help=f"comma-separated formats: {','.join(FORMATS)}")
    _add_drawing_arguments(sclop)

    prototype = commands.add_parser("prototype", help="select the prototype run of a run directory")
    prototype.add_argument("runs", type=Path)
    prototype.add_argument("-o", "--output", type=Path, default=None, help="output directory (default: RUNS/prototype)")
    _add_similarity_arguments(prototype)
    prototype.add_argument("--model-measure", choices=[m.value for m in ModelMeasure], default=ModelMeasure.SCLOP.value)

    study = commands.add_parser("study", help="measure prototype reliability over run subsamples")
    study.add_argument("corpus", type=Path)
    study.add_argument("-o", "--output", type=Path, default=Path("study"))
    study.add_argument("--sets", type=int, default=20)
    study.add_argument("--runs", type=int, default=10)
    study.add_argument("--sizes", default="5,10")
    _add_lda_arguments(study)
    _add_similarity_arguments(study)
    study.add_argument("--model-measure", choices=[m.value for m in ModelMeasure], default=ModelMeasure.SCLOP.value)

    export = commands.add_parser("export", help="re-render a saved S-CLOP analysis")
    export.add_argument("analysis", type=Path)
    export.add_argument("-o", "--output", type=Path, default=None, help="output directory (default: ANALYSIS)")
    export.add_argument("--format", default=",".join(FORMATS))
    export.add_argument("--runs", type=Path, default=None, help="run directory, needed for --top-words")
    _add_drawing_arguments(export)

    return parser


def _add_lda_arguments(parser):
    parser.add_argument("--k", type=int, default=50)
    parser.add_argument("--alpha", type=float, default=None, help="default: 1/K")
    parser.add_argument("--beta", type=float, default=None, help="default: 1/K")
    parser.add_argument("--iters", type=int, default=270)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--check-invariants", action="store_true")


def _add_similarity_arguments(parser):
    parser.add_argument("--measure", choices=[m.value for m in Measure], default=Measure.MODIFIED_JACCARD.value)
    parser.add_argument("--threshold-mode", choices=[m.value for m in ThresholdMode], default=ThresholdMode.RELATIVE.value)
    parser.add_argument("--threshold-value", type=float, default=500)
    parser.add_argument("--n-top", type=int, default=5)


def _add_drawing_arguments(parser):
    parser.add_argument("--color-by", choices=["run", "cluster"], default="run")
    parser.add_argument("--top-words", type=int, default=0, help="top words per leaf label")


def _threshold(args):
    return ThresholdConfig(mode=args.threshold_mode, value=args.threshold_value)


def _lda_config(args):
    return LdaConfig(K=args.k, alpha=args.alpha, beta=args.beta, iterations=args.iters, seed=args.seed)


def _formats(value: str):
    formats = [fmt.strip() for fmt in value.split(",") if fmt.strip() != ""]
    unknown = [fmt for fmt in formats if fmt not in FORMATS]
    if len(unknown) > 0:
        raise UsageError(f"Unknown export format(s): {', '.join(unknown)}")

    return formats


def _sizes(value: str):
    try:
        return [int(size) for size in value.split(",") if size.strip() != ""]
    except ValueError:
        raise UsageError(f"--sizes must be comma-separated integers, got {value!r}")


def _arguments(args, **resolved):
    arguments = {key: str(value) if isinstance(value, Path) else value for key, value in vars(args).items()}
    arguments.update(resolved)
    return arguments


async def cmd_preprocess(args, executor):
    if args.no_stopwords:
        stopwords = frozenset()
    elif args.stopwords is not None:
        stopwords = await CorpusStore.read_stopwords(args.stopwords)
    else:
        stopwords = await Config.get_default_stopwords()

    cfg = PreprocessConfig(
        lowercase=not args.keep_case,
        strip_numbers=not args.keep_numbers,
        strip_punctuation=not args.keep_punctuation,
        stopword_list=stopwords,
        min_word_count=args.min_count,
        deduplicate=not args.keep_duplicates,
    )
    docs = await CorpusStore.read_documents(args.input)
    corpus, report = CorpusPreprocessor.preprocess_with_report(docs, cfg)

    await asyncio.gather(
        CorpusStore.write_corpus(corpus, args.output),
        ArtifactStore.write_json(report.dict(), args.output.with_suffix(".report.json")),
        ArtifactStore.write_json(
            _arguments(args, stopword_count=len(stopwords)), args.output.with_suffix(".config.json")
        ),
    )
    logging.info(f"Wrote corpus to {args.output}")


async def cmd_synth(args, executor):
    spec = SyntheticSpec(
        n_true_topics=args.topics,
        vocab_size=args.vocab,
        docs=args.docs,
        doc_length=args.length,
        topic_concentration=args.concentration,
        noise_rate=args.noise,
        seed=args.seed,
    )
    corpus = SyntheticCorpusGenerator(spec).corpus()

    await asyncio.gather(
        CorpusStore.write_corpus(corpus, args.output),
        ArtifactStore.write_json(_arguments(args, spec=spec.dict()), args.output.with_suffix(".config.json")),
    )
    logging.info(f"Wrote synthetic corpus to {args.output}")


async def cmd_fit(args, executor):
    cfg = _lda_config(args)
    corpus = await CorpusStore.read_corpus(args.corpus)
    check_invariants = args.check_invariants or Config.is_debug()

    runset = await replicate_async(corpus, cfg, args.reps, args.seed, executor, check_invariants)

    await RunStore.write_runset(runset, args.output, CorpusStore.corpus_hash(corpus))
    await ArtifactStore.write_json(
        _arguments(args, alpha=cfg.alpha, beta=cfg.beta, seeds=runset.seeds), args.output / "config.json"
    )


async def cmd_sclop(args, executor):
    cfg = _threshold(args)
    formats = _formats(args.export)
    output = args.output or args.runs / "sclop"
    runset = await RunStore.read_runset(args.runs)

    loop = asyncio.get_event_loop()
    analysis = await loop.run_in_executor(executor, analyse, runset, cfg, Measure(args.measure), args.n_top)

    await ArtifactStore.write_analysis(analysis, output, cfg)
    await ArtifactStore.write_json(_arguments(args), output / "config.json")

    names = _names(analysis.dendrogram, runset, args.top_words)
    await _write_exports(formats, analysis.dendrogram, analysis.report, output, args.color_by, names)

    print(f"{analysis.report.score:.4f}")


async def cmd_prototype(args, executor):
    cfg = _threshold(args)
    output = args.output or args.runs / "prototype"
    runset = await RunStore.read_runset(args.runs)

    if runset.R < RECOMMENDED_REPLICATIONS:
        logging.warning(
            f"Only {runset.R} runs; at least {RECOMMENDED_REPLICATIONS} are recommended for prototype selection"
        )

    result = await mean_similarity_matrix_async(
        runset, cfg, executor, Measure(args.measure), ModelMeasure(args.model_measure), args.n_top
    )

    output.mkdir(parents=True, exist_ok=True)
    name = RunStore.run_name(result.prototype_index)
    await asyncio.gather(
        ArtifactStore.write_frame(ArtifactStore.means_frame(result), output / "means.csv"),
        ArtifactStore.write_frame(ArtifactStore.pairwise_frame(result.pairwise), output / "pairwise.csv", index=True),
        RunStore.write_counts(runset.runs[result.prototype_index], runset.vocabulary, output / "prototype.csv"),
        ArtifactStore.write_json(
            {
                "run": name,
                "run_index": result.prototype_index,
                "seed": runset.seeds[result.prototype_index],
                "mean_similarity": float(result.mean_similarity[result.prototype_index]),
                "tie_note": result.tie_note,
            },
            output / "prototype.json",
        ),
        ArtifactStore.write_json(_arguments(args), output / "config.json"),
    )

    print(name)


async def cmd_study(args, executor):
    cfg = _threshold(args)
    lda_cfg = _lda_config(args)
    sizes = _sizes(args.sizes)
    corpus = await CorpusStore.read_corpus(args.corpus)
    check_invariants = args.check_invariants or Config.is_debug()

    if args.sets < 2:
        raise UsageError("--sets must be at least 2")

    sets = []
    for index, master_seed in enumerate(derive_seeds(args.seed, args.sets)):
        logging.info(f"Fitting set {index + 1}/{args.sets}")
        sets.append(await replicate_async(corpus, lda_cfg, args.runs, master_seed, executor, check_invariants))

    loop = asyncio.get_event_loop()
    result = await loop.run_in_executor(
        executor,
        subsample_study,
        sets, sizes, args.seed, cfg, Measure(args.measure), ModelMeasure(args.model_measure), args.n_top,
    )

    args.output.mkdir(parents=True, exist_ok=True)
    await asyncio.gather(
        ArtifactStore.write_frame(ArtifactStore.study_frame(result), args.output / "study.csv"),
        ArtifactStore.write_text(ReportFormatter().get_ecdf_svg(result), args.output / "ecdf.svg"),
        ArtifactStore.write_json(
            {str(size): [index + 1 for index in chosen] for size, chosen in result.prototype_indices.items()},
            args.output / "prototypes.json",
        ),
        ArtifactStore.write_json(_arguments(args, alpha=lda_cfg.alpha, beta=lda_cfg.beta), args.output / "config.json"),
    )
    logging.info(f"Wrote study to {args.output}")


async def cmd_export(args, executor):
    formats = _formats(args.format)
    output = args.output or args.analysis
    dendrogram, report = await ArtifactStore.read_analysis(args.analysis)

    runset = None
    if args.top_words > 0:
        if args.runs is None:
            raise UsageError("--top-words needs --runs")
        runset = await RunStore.read_runset(args.runs)

    output.mkdir(parents=True, exist_ok=True)
    await _write_exports(formats, dendrogram, report, output, args.color_by, _names(dendrogram, runset, args.top_words))


def _names(dendrogram, runset, n_words):
    if runset is None or n_words < 1:
        return None

    return leaf_names(dendrogram.labels, topic_top_words(runset, n_words))


async def _write_exports(formats, dendrogram, report, output, color_by, names):
    if len(formats) == 0:
        return

    formatter = ReportFormatter()
    await asyncio.gather(*(
        ArtifactStore.write_text(formatter.render(fmt, dendrogram, report, color_by, names), output / EXPORT_FILES[fmt])
        for fmt in formats
    ))
    logging.info(f"Exported {', '.join(formats)} to {output}")


COMMANDS = {
    "preprocess": cmd_preprocess,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "sclop": cmd_sclop,
    "prototype": cmd_prototype,
    "study": cmd_study,
    "export": cmd_export,
}


def _executor(jobs: int):
    if jobs == 1:
        return ThreadPoolExecutor(max_workers=1)

    return ProcessPoolExecutor(max_workers=jobs)


async def main(argv=None):
    """
    Runs one CLI command.
    :return: The exit code: 0 on success, 1 on a computation error, 2 on a usage or I/O error.
    """
    args = build_parser().parse_args(argv)

    try:
        logging.basicConfig(
            level=Config.get_log_level(),
            format="[%(asctime)s][%(module)s:%(funcName)s:%(lineno)d] %(levelname)s: %(message)s"
        )

        jobs = args.jobs if args.jobs is not None else Config.get_jobs()
        if jobs < 1:
            raise UsageError(f"--jobs must be at least 1, got {jobs}")

        with _executor(jobs) as executor:
            await COMMANDS[args.command](args, executor)
    except ComputationError as e:
        logging.error(f"{args.command} failed: {e}", exc_info=Config.is_debug())
        return e.exit_code
    except (UsageError, ConfigurationError) as e:
        logging.error(str(e))
        return e.exit_code
    except ValidationError as e:
        logging.error(f"Invalid parameters: {e}")
        return UsageError.exit_code
    except OSError as e:
        logging.error(f"I/O error: {e}")
        return UsageError.exit_code
    except SclopError as e:
        logging.error(str(e), exc_info=True)
        return e.exit_code

    return 0


def run():
    sys.exit(asyncio.run(main()))


if __name__ == "__main__":
    run()
