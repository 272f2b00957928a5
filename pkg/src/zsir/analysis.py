"""Text analysis: English/wordpiece/whitespace analyzers, sentence
splitting, sliding sentence windows and first-N-token truncation."""

from __future__ import annotations

import hashlib
import os
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Literal, NamedTuple, Sequence

from nltk.stem.porter import PorterStemmer

# Lucene's default English stop set (33 words).
ENGLISH_STOPWORDS = frozenset("""
a an and are as at be but by for if in into is it no not of on or such
that the their then there these they this to was will with
""".split())

UNK = "[UNK]"
MAX_WORD_CHARS = 100

_WORD = re.compile(r"[^\W_]+")
_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


@lru_cache(maxsize=200_000)
def _stem(word: str) -> str:
    return _stemmer.stem(word)


class Token(NamedTuple):
    term: str
    start: int
    end: int


def _english_tokens(text: str, stopwords: frozenset[str]) -> list[Token]:
    out = []
    for m in _WORD.finditer(text):
        w = m.group().lower()
        if w in stopwords:
            continue
        out.append(Token(_stem(w), m.start(), m.end()))
    return out


def _whitespace_tokens(text: str) -> list[Token]:
    return [Token(m.group(), m.start(), m.end()) for m in re.finditer(r"\S+", text)]


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def _presplit(text: str) -> Iterable[tuple[str, int]]:
    """Split on whitespace and isolate punctuation/symbol characters."""
    start = None
    for i, ch in enumerate(text):
        if ch.isspace() or _is_punct(ch):
            if start is not None:
                yield text[start:i], start
                start = None
            if not ch.isspace():
                yield ch, i
        elif start is None:
            start = i
    if start is not None:
        yield text[start:], start


def wordpiece_word(word: str, vocab: frozenset[str] | set[str] | dict, unk: str = UNK) -> list[str]:
    """Greedy longest-prefix decomposition of one (already lowercased) word."""
    if len(word) > MAX_WORD_CHARS:
        return [unk]
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        cur = None
        while start < end:
            sub = word[start:end] if start == 0 else "##" + word[start:end]
            if sub in vocab:
                cur = sub
                break
            end -= 1
        if cur is None:
            return [unk]
        pieces.append(cur)
        start = end
    return pieces


def _wordpiece_tokens(text: str, vocab, unk: str) -> list[Token]:
    out = []
    for word, pos in _presplit(text):
        lw = word.lower()
        pieces = wordpiece_word(lw, vocab, unk)
        if pieces == [unk] or len(lw) != len(word):
            out.extend(Token(p, pos, pos + len(word)) for p in pieces)
            continue
        off = pos
        for p in pieces:
            n = len(p) - 2 if p.startswith("##") else len(p)
            out.append(Token(p, off, off + n))
            off += n
    return out


def load_vocab(path: str | os.PathLike) -> list[str]:
    """One token per line; the line number is the token id."""
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


@dataclass(frozen=True)
class AnalyzerConfig:
    mode: Literal["english", "wordpiece", "whitespace"] = "english"
    vocab: tuple[str, ...] | None = None
    stopwords: frozenset[str] = ENGLISH_STOPWORDS
    unk: str = UNK

    def __post_init__(self):
        if self.mode not in ("english", "wordpiece", "whitespace"):
            raise ValueError(f"unknown analyzer mode {self.mode!r}")
        if self.mode == "wordpiece":
            if not self.vocab:
                raise ValueError("wordpiece analyzer needs a nonempty vocabulary")
            if self.unk not in self.vocab:
                raise ValueError(f"vocabulary lacks the unknown symbol {self.unk!r}")


class Analyzer:
    """Callable text -> list of terms, built from an :class:`AnalyzerConfig`."""

    def __init__(self, config: AnalyzerConfig | None = None):
        self.config = config or AnalyzerConfig()
        self._vocab = frozenset(self.config.vocab or ())

    @classmethod
    def from_mode(cls, mode: str, vocab_path: str | os.PathLike | None = None) -> "Analyzer":
        vocab = tuple(load_vocab(vocab_path)) if vocab_path else None
        return cls(AnalyzerConfig(mode=mode, vocab=vocab))

    def tokens(self, text: str) -> list[Token]:
        c = self.config
        if c.mode == "english":
            return _english_tokens(text, c.stopwords)
        if c.mode == "wordpiece":
            return _wordpiece_tokens(text, self._vocab, c.unk)
        return _whitespace_tokens(text)

    def __call__(self, text: str) -> list[str]:
        return [t.term for t in self.tokens(text)]

    @property
    def fingerprint(self) -> str:
        c = self.config
        h = hashlib.sha256()
        h.update(c.mode.encode())
        if c.mode == "english":
            h.update(b"porter-original\0" + "\0".join(sorted(c.stopwords)).encode())
        elif c.mode == "wordpiece":
            h.update(c.unk.encode() + b"\0" + "\n".join(c.vocab).encode())
        return h.hexdigest()[:16]


def analyze_english(text: str) -> list[str]:
    return [t.term for t in _english_tokens(text, ENGLISH_STOPWORDS)]


def analyze_wordpiece(text: str, vocab: Iterable[str], unk: str = UNK) -> list[str]:
    return [t.term for t in _wordpiece_tokens(text, frozenset(vocab), unk)]


def analyze_whitespace(text: str) -> list[str]:
    return text.split()


# Sentence splitting ---------------------------------------------------------

ABBREVIATIONS = frozenset(["e.g.", "i.e.", "dr.", "mr.", "mrs.", "ms.", "prof.", "st.",
                           "vs.", "cf.", "fig.", "al.", "no."])

# terminator run, optional closing quotes/brackets, then whitespace + (upper|digit) or end
_BOUNDARY = re.compile(r"[.!?]+['\")\]]*(?=\s+(?:[^\W\d_]|\d)|\s*$)")


class SentenceSpan(NamedTuple):
    start: int
    end: int


def split_sentences(text: str) -> list[SentenceSpan]:
    """Rule-based splitter returning character spans with surrounding whitespace trimmed.

    A sentence ends at ``.``, ``!`` or ``?`` followed by whitespace and an
    uppercase letter or digit (or the end of text), unless the word ending
    in ``.`` is in :data:`ABBREVIATIONS`.
    """
    spans = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        nxt = text[m.end():].lstrip()
        if nxt and not (nxt[0].isupper() or nxt[0].isdigit()):
            continue
        if m.group().startswith(".") and _abbrev_before(text, m.start()):
            continue
        _push(spans, text, start, m.end())
        start = m.end()
    _push(spans, text, start, len(text))
    return spans


def _abbrev_before(text: str, dot: int) -> bool:
    i = dot
    while i > 0 and not text[i - 1].isspace():
        i -= 1
    return text[i:dot + 1].lower() in ABBREVIATIONS


def _push(spans: list, text: str, a: int, b: int) -> None:
    seg = text[a:b]
    stripped = seg.strip()
    if stripped:
        a += len(seg) - len(seg.lstrip())
        spans.append(SentenceSpan(a, a + len(stripped)))


# Windows ---------------------------------------------------------------------

@dataclass(frozen=True)
class WindowConfig:
    window_size: int = 10
    stride: int = 5

    def __post_init__(self):
        if self.window_size < 1 or self.stride < 1 or self.stride > self.window_size:
            raise ValueError("need 1 <= stride <= window_size")


@dataclass(frozen=True)
class Passage:
    parent_doc_id: str
    window_index: int
    text: str
    sentence_span: tuple[int, int]
    title: str = field(default="", compare=False)

    def passage_id(self, sep: str = "#") -> str:
        return f"{self.parent_doc_id}{sep}{self.window_index}"


def window_spans(num_sentences: int, cfg: WindowConfig) -> list[tuple[int, int]]:
    """Window spans over sentence indices; windows fully inside the previous one are dropped."""
    spans: list[tuple[int, int]] = []
    for s in range(0, num_sentences, cfg.stride):
        span = (s, min(s + cfg.window_size, num_sentences))
        if spans and spans[-1][0] <= span[0] and span[1] <= spans[-1][1]:
            continue
        spans.append(span)
    return spans


def make_windows(sentences: Sequence[SentenceSpan], cfg: WindowConfig,
                 doc_id: str = "", text: str = "", title: str = "") -> list[Passage]:
    out = []
    for i, (a, b) in enumerate(window_spans(len(sentences), cfg)):
        body = text[sentences[a].start:sentences[b - 1].end] if text else ""
        out.append(Passage(doc_id, i, body, (a, b), title))
    return out


def segment_document(doc_id: str, text: str, cfg: WindowConfig, title: str = "") -> list[Passage]:
    """Split ``text`` into sentences and emit sliding-window passages."""
    return make_windows(split_sentences(text), cfg, doc_id, text, title)


def first_p(text: str, n_tokens: int, analyzer: Analyzer) -> str:
    """Prefix of ``text`` ending at the n-th analyzer token."""
    if n_tokens < 1:
        raise ValueError("n_tokens must be >= 1")
    toks = analyzer.tokens(text)
    if len(toks) <= n_tokens:
        return text
    return text[:toks[n_tokens - 1].end]
