import asyncio
import hashlib
import json
import logging
import re
from collections import Counter
from pathlib import Path
from typing import List, Tuple, Union

import aiofiles
from pydantic import ValidationError

from errors import PreprocessingError, UsageError
from modeling.models import Corpus, FilterReport, PreprocessConfig, RawDocument


class CorpusPreprocessor:
    """
    Turns raw documents into a tokenized corpus.

    The filters run in a fixed order: lowercase, strip numbers, strip
    punctuation, split on whitespace, remove stopwords, remove words whose
    corpus-wide count is below the minimum.
    """

    __number_pattern = re.compile(r"\d")
    __punctuation_pattern = re.compile(r"[^\w\s]|_")

    @staticmethod
    def deduplicate(docs: List[RawDocument]):
        """
        Removes documents whose text exactly equals the text of an earlier document.
        :param docs: The documents, in input order.
        :return: The first occurrence of every distinct text, in input order.
        """
        kept, removed = CorpusPreprocessor.__deduplicate(docs)
        if len(removed) > 0:
            logging.info(f"Removed {len(removed)} duplicate documents")

        return kept

    @staticmethod
    def preprocess(docs: List[RawDocument], cfg: PreprocessConfig):
        corpus, _ = CorpusPreprocessor.preprocess_with_report(docs, cfg)
        return corpus

    @staticmethod
    def preprocess_with_report(docs: List[RawDocument], cfg: PreprocessConfig) -> Tuple[Corpus, FilterReport]:
        """
        Preprocess documents and report what was removed.
        :param docs: The raw documents.
        :param cfg: The preprocessing configuration.
        :return: A tuple containing the corpus and the filter report.
        """
        report = FilterReport()

        if cfg.deduplicate:
            docs, report.removed_duplicates = CorpusPreprocessor.__deduplicate(docs)
            if len(report.removed_duplicates) > 0:
                logging.info(f"Removed {len(report.removed_duplicates)} duplicate documents")

        if len(docs) == 0:
            raise PreprocessingError("deduplication", "No documents to preprocess")

        token_lists = [CorpusPreprocessor.__tokenize(doc.text, cfg) for doc in docs]
        CorpusPreprocessor.__ensure_tokens_left(token_lists, "tokenization")

        if len(cfg.stopword_list) > 0:
            token_lists = [[token for token in tokens if token not in cfg.stopword_list] for tokens in token_lists]
            CorpusPreprocessor.__ensure_tokens_left(token_lists, "stopword removal")

        counts = Counter(token for tokens in token_lists for token in tokens)
        report.raw_vocabulary_size = len(counts)

        kept_words = {word for word, count in counts.items() if count >= cfg.min_word_count}
        token_lists = [[token for token in tokens if token in kept_words] for tokens in token_lists]
        CorpusPreprocessor.__ensure_tokens_left(token_lists, "minimum count filter")

        vocabulary = sorted(kept_words)
        word_ids = {word: index + 1 for index, word in enumerate(vocabulary)}

        documents = []
        doc_ids = []
        for doc, tokens in zip(docs, token_lists):
            if len(tokens) == 0:
                report.dropped_documents.append(doc.id)
                continue

            documents.append([word_ids[token] for token in tokens])
            doc_ids.append(doc.id)

        if len(report.dropped_documents) > 0:
            logging.warning(f"Dropped {len(report.dropped_documents)} documents left empty by preprocessing")

        report.vocabulary_size = len(vocabulary)
        report.token_count = sum(len(tokens) for tokens in documents)
        logging.info(
            f"Preprocessed {len(documents)} documents: vocabulary {report.raw_vocabulary_size} -> "
            f"{report.vocabulary_size} words, {report.token_count} tokens"
        )

        return Corpus(documents=documents, vocabulary=vocabulary, doc_ids=doc_ids), report

    @staticmethod
    def __deduplicate(docs):
        seen = set()
        kept = []
        removed = []
        for doc in docs:
            if doc.text in seen:
                removed.append(doc.id)
                continue

            seen.add(doc.text)
            kept.append(doc)

        return kept, removed

    @staticmethod
    def __tokenize(text: str, cfg: PreprocessConfig):
        if cfg.lowercase:
            text = text.lower()

        if cfg.strip_numbers:
            text = CorpusPreprocessor.__number_pattern.sub("", text)

        if cfg.strip_punctuation:
            text = CorpusPreprocessor.__punctuation_pattern.sub("", text)

        return text.split()

    @staticmethod
    def __ensure_tokens_left(token_lists, stage):
        if all(len(tokens) == 0 for tokens in token_lists):
            raise PreprocessingError(stage)


class CorpusStore:
    """Reads raw documents and stopword lists, and reads/writes corpus files."""

    @staticmethod
    async def read_documents(path: Union[str, Path]):
        """
        Reads raw documents from a directory of ``.txt`` files or a JSONL file.

        In a directory, every ``.txt`` file is one document whose id is the
        file name. A JSONL file holds one ``{"id": ..., "text": ...}`` object per line.
        """
        path = Path(path)
        if not path.exists():
            raise UsageError(f"Input not found: {path}")

        if path.is_dir():
            files = sorted(path.glob("*.txt"))
            texts = await asyncio.gather(*(CorpusStore.__read_text(file) for file in files))
            return [RawDocument(id=file.name, text=text) for file, text in zip(files, texts)]

        text = await CorpusStore.__read_text(path)
        docs = []
        for line_number, line in enumerate(text.splitlines(), start=1):
            if line.strip() == "":
                continue

            try:
                docs.append(RawDocument.parse_obj(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as e:
                raise UsageError(f"{path}:{line_number}: invalid document record ({e})")

        return docs

    @staticmethod
    async def read_stopwords(path: Union[str, Path]):
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"Stopword file not found: {path}")

        text = await CorpusStore.__read_text(path)
        return frozenset(line.strip() for line in text.splitlines() if line.strip() != "")

    @staticmethod
    async def write_corpus(corpus: Corpus, path: Union[str, Path]):
        async with aiofiles.open(path, "w", encoding="utf-8") as file:
            await file.write(CorpusStore.dumps(corpus))

    @staticmethod
    async def read_corpus(path: Union[str, Path]):
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"Corpus file not found: {path}")

        text = await CorpusStore.__read_text(path)
        try:
            data = json.loads(text)
            documents = [doc["tokens"] for doc in data["docs"]]
            doc_ids = [doc["id"] for doc in data["docs"]]
            vocabulary = data["vocabulary"]
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}: invalid JSON ({e})")
        except (KeyError, TypeError) as e:
            raise UsageError(f"{path}: not a corpus file, expected {{vocabulary, docs: [{{id, tokens}}]}} ({e!r})")

        return Corpus(documents=documents, vocabulary=vocabulary, doc_ids=doc_ids)

    @staticmethod
    def dumps(corpus: Corpus):
        data = {
            "vocabulary": corpus.vocabulary,
            "docs": [{"id": doc_id, "tokens": tokens} for doc_id, tokens in zip(corpus.doc_ids, corpus.documents)],
        }
        return json.dumps(data, ensure_ascii=False, separators=(",", ":"))

    @staticmethod
    def corpus_hash(corpus: Corpus):
        return hashlib.sha256(CorpusStore.dumps(corpus).encode("utf-8")).hexdigest()

    @staticmethod
    async def __read_text(path: Path):
        async with aiofiles.open(path, "r", encoding="utf-8") as file:
            try:
                return await file.read()
            except UnicodeDecodeError as e:
                raise UsageError(f"{path}: not valid UTF-8 text ({e.reason} at byte {e.start})")
