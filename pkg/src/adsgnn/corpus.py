"""Text ingestion: vocabulary, greedy subword tokenization, and model input
sequence construction.

Normalization is lowercase plus whitespace split; queries and ads are short
keyword text, so nothing fancier is needed.  Tokenization is inference-style
greedy longest-prefix matching with "##" continuation pieces; vocabulary
construction ranks whole words by frequency and always includes every single
character seen in the corpus so matching cannot dead-end mid-word.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

PAD, UNK, CLS, SEP, MASK = 0, 1, 2, 3, 4
SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
NUM_SPECIALS = len(SPECIAL_TOKENS)


class LineFormatError(ValueError):
    """Malformed line in a TSV input; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def normalize(text):
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class Vocab:
    entries: tuple

    def __post_init__(self):
        if list(self.entries[:NUM_SPECIALS]) != SPECIAL_TOKENS:
            raise ValueError("vocab must start with the five special tokens")
        if len(set(self.entries)) != len(self.entries):
            raise ValueError("vocab entries must be unique")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.entries)})

    def __len__(self):
        return len(self.entries)

    def __contains__(self, token):
        return token in self._index

    def id_of(self, token):
        return self._index[token]

    def token_of(self, idx):
        return self.entries[idx]


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length id sequence: position 0 is [CLS], padded slots mask 0."""

    ids: tuple
    attention_mask: tuple

    def __post_init__(self):
        if len(self.ids) != len(self.attention_mask):
            raise ValueError("ids and attention_mask lengths differ")


@dataclass(frozen=True)
class LabeledTriple:
    query: str
    ad: str
    label: int


def build_vocab(corpus, max_size):
    """Frequency-ranked whole words plus all corpus characters.

    The five specials occupy indices 0-4.  Characters are mandatory (greedy
    matching falls back to them); remaining capacity is filled with whole
    words ordered by descending frequency, ties broken lexicographically.
    """
    if max_size < 6:
        raise ValueError("max_size must be at least 6")
    word_counts = Counter()
    char_counts = Counter()
    for text in corpus:
        for word in normalize(text).split():
            word_counts[word] += 1
            char_counts.update(word)
    if not word_counts:
        raise ValueError("empty corpus: no trainable vocabulary")

    chars = sorted(char_counts, key=lambda c: (-char_counts[c], c))
    entries = list(SPECIAL_TOKENS) + chars
    budget = max_size - len(entries)
    words = [w for w in sorted(word_counts, key=lambda w: (-word_counts[w], w))
             if len(w) > 1]
    entries.extend(words[:max(0, budget)])
    return Vocab(tuple(entries))


def _match_word(word, vocab):
    """Greedy longest-prefix segmentation of one word, or None on dead-end.

    Continuation positions accept a "##"-prefixed vocab entry and fall back
    to the bare entry, so a vocabulary holding every character never
    dead-ends.
    """
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            sub = word[start:end]
            if start > 0 and ("##" + sub) in vocab:
                match = "##" + sub
                break
            if sub in vocab:
                match = sub
                break
            end -= 1
        if match is None:
            return None
        pieces.append(match)
        start = end
    return pieces


def tokenize(text, vocab):
    """Lowercase, whitespace-split, then greedy subword matching per word.

    A word that cannot be segmented yields a single [UNK].
    """
    ids = []
    for word in normalize(text).split():
        pieces = _match_word(word, vocab)
        if pieces is None:
            ids.append(UNK)
        else:
            ids.extend(vocab.id_of(p) for p in pieces)
    return ids


def encode_single(text, vocab, max_len):
    """[CLS] + tokens, truncated then padded to exactly max_len."""
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    ids = [CLS] + tokenize(text, vocab)
    ids = ids[:max_len]
    mask = [1] * len(ids) + [0] * (max_len - len(ids))
    ids = ids + [PAD] * (max_len - len(ids))
    return TokenSequence(tuple(ids), tuple(mask))


def encode_pair(query, ad, vocab, max_len):
    """[CLS] + query + [SEP] + ad, padded to max_len.

    When over budget, tokens are trimmed from the tails alternately,
    starting with the longer side (query side on ties), so both heads
    survive truncation.
    """
    if max_len < 3:
        raise ValueError("max_len must be at least 3")
    q = tokenize(query, vocab)
    a = tokenize(ad, vocab)
    budget = max_len - 2
    while len(q) + len(a) > budget:
        if len(a) > len(q):
            a.pop()
        else:
            q.pop()
    ids = [CLS] + q + [SEP] + a
    mask = [1] * len(ids) + [0] * (max_len - len(ids))
    ids = ids + [PAD] * (max_len - len(ids))
    return TokenSequence(tuple(ids), tuple(mask))


def load_labeled_triples(stream):
    """Parse `query<TAB>ad<TAB>label` lines into LabeledTriple records."""
    triples = []
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise LineFormatError(line_no, f"expected 3 tab-separated fields, got {len(fields)}")
        query, ad, raw_label = fields
        if raw_label not in ("0", "1"):
            raise LineFormatError(line_no, f"label must be 0 or 1, got {raw_label!r}")
        query, ad = normalize(query), normalize(ad)
        if not query or not ad:
            raise LineFormatError(line_no, "empty query or ad text")
        triples.append(LabeledTriple(query, ad, int(raw_label)))
    return triples


def load_triples_file(path):
    with open(path, encoding="utf-8") as f:
        return load_labeled_triples(f)


def save_vocab(path, vocab):
    with open(path, "w", encoding="utf-8") as f:
        for token in vocab.entries:
            f.write(token + "\n")


def load_vocab(path):
    with open(path, encoding="utf-8") as f:
        return Vocab(tuple(line.rstrip("\n") for line in f))
