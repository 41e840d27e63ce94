"""Tweet-aware tokenization, Porter stemming, and noun/pronoun counting.

The tokenizer implements fixed, library-independent rules (URL and
mention normalization, hashtag preservation, character-run squeezing).
Stemming is the original published Porter algorithm.  Noun counting
supports a high-fidelity part-of-speech sidecar file and a builtin
closed-class heuristic.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

from .errors import MalformedRow, MissingFile, MissingSidecarEntry

# --- tokenization -------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<url>(?i:https?://|www\.)\S+)
    | (?P<mention>@\w+)
    | (?P<placeholder><(?:url|user)>)
    | (?P<hashtag>\#\w+)
    | (?P<word>\w+(?:['’]\w+)*)
    | (?P<other>[^\w\s]+)
    """,
    re.VERBOSE,
)

_SQUEEZE_RE = re.compile(r"(.)\1{3,}")


@dataclass
class TokenSequence:
    """Ordered lowercase tokens plus the raw token count before any
    normalization or filtering."""

    tokens: list[str]
    original_len: int

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def _squeeze(token: str) -> str:
    # character runs longer than 3 collapse to exactly 3
    return _SQUEEZE_RE.sub(r"\1\1\1", token)


def tokenize_tweet(text: str) -> TokenSequence:
    """Tokenize raw tweet text.

    Rules: URLs collapse to ``<url>``; @-mentions to ``<user>``; hashtags
    are kept whole (``#MAGA2020`` -> ``#maga2020``); words and
    punctuation/emoji runs are single tokens; everything is lowercased
    and character runs longer than 3 are squeezed to 3.  The output
    retokenizes to itself, so ``<url>``/``<user>`` are recognized as
    single tokens too.
    """
    tokens: list[str] = []
    count = 0
    for match in _TOKEN_RE.finditer(text):
        count += 1
        kind = match.lastgroup
        raw = match.group()
        if kind == "url":
            tokens.append("<url>")
        elif kind == "mention":
            tokens.append("<user>")
        elif kind == "placeholder":
            tokens.append(raw)
        else:
            tokens.append(_squeeze(raw.lower()))
    return TokenSequence(tokens=tokens, original_len=count)


# --- Porter stemming ----------------------------------------------------

_VOWELS = "aeiou"

_STEP2_RULES = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)

_STEP3_RULES = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)

# "ement" before "ment" before "ent": longest suffix must win
_STEP4_SUFFIXES = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


class _PorterState:
    """Mutable word buffer with the algorithm's stem-condition helpers.

    ``k`` indexes the last live character; ``j`` the last character of
    the candidate stem after a suffix match.
    """

    def __init__(self, word: str):
        self.b = list(word)
        self.k = len(word) - 1
        self.j = 0

    def cons(self, i: int) -> bool:
        ch = self.b[i]
        if ch in _VOWELS:
            return False
        if ch == "y":
            return True if i == 0 else not self.cons(i - 1)
        return True

    def measure(self) -> int:
        """Number of VC sequences in b[0..j] (the form [C](VC)^m[V])."""
        n = 0
        i = 0
        while True:
            if i > self.j:
                return n
            if not self.cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > self.j:
                    return n
                if self.cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > self.j:
                    return n
                if not self.cons(i):
                    break
                i += 1
            i += 1

    def vowel_in_stem(self) -> bool:
        return any(not self.cons(i) for i in range(self.j + 1))

    def double_cons(self, i: int) -> bool:
        return i >= 1 and self.b[i] == self.b[i - 1] and self.cons(i)

    def cvc(self, i: int) -> bool:
        """consonant-vowel-consonant ending at i, last consonant not w/x/y."""
        if i < 2 or not self.cons(i) or self.cons(i - 1) or not self.cons(i - 2):
            return False
        return self.b[i] not in "wxy"

    def ends(self, suffix: str) -> bool:
        length = len(suffix)
        if length > self.k + 1:
            return False
        if self.b[self.k - length + 1 : self.k + 1] != list(suffix):
            return False
        self.j = self.k - length
        return True

    def set_to(self, s: str) -> None:
        self.b[self.j + 1 :] = list(s)
        self.k = self.j + len(s)

    def replace_if_m(self, s: str) -> None:
        if self.measure() > 0:
            self.set_to(s)

    def word(self) -> str:
        return "".join(self.b[: self.k + 1])


def _step1ab(st: _PorterState) -> None:
    if st.b[st.k] == "s":
        if st.ends("sses"):
            st.k -= 2
        elif st.ends("ies"):
            st.set_to("i")
        elif st.b[st.k - 1] != "s":
            st.k -= 1
    if st.ends("eed"):
        if st.measure() > 0:
            st.k -= 1
    elif (st.ends("ed") or st.ends("ing")) and st.vowel_in_stem():
        st.k = st.j
        if st.ends("at"):
            st.set_to("ate")
        elif st.ends("bl"):
            st.set_to("ble")
        elif st.ends("iz"):
            st.set_to("ize")
        elif st.double_cons(st.k):
            if st.b[st.k] not in "lsz":
                st.k -= 1
        else:
            st.j = st.k
            if st.measure() == 1 and st.cvc(st.k):
                st.set_to("e")


def _step1c(st: _PorterState) -> None:
    if st.ends("y") and st.vowel_in_stem():
        st.b[st.k] = "i"


def _apply_rules(st: _PorterState, rules) -> None:
    for suffix, repl in rules:
        if st.ends(suffix):
            st.replace_if_m(repl)
            return


def _step4(st: _PorterState) -> None:
    for suffix in _STEP4_SUFFIXES:
        if st.ends(suffix):
            if suffix == "ion" and (st.j < 0 or st.b[st.j] not in "st"):
                continue
            if st.measure() > 1:
                st.k = st.j
            return


def _step5(st: _PorterState) -> None:
    st.j = st.k
    if st.b[st.k] == "e":
        a = st.measure()
        if a > 1 or (a == 1 and not st.cvc(st.k - 1)):
            st.k -= 1
    st.j = st.k
    if st.b[st.k] == "l" and st.double_cons(st.k) and st.measure() > 1:
        st.k -= 1


def porter_stem(word: str) -> str:
    """Stem of a lowercase word under the original Porter algorithm.

    Words of length 1 or 2 are returned unchanged.  Non-letter characters
    are treated as consonants, which leaves tokens like ``!!!`` alone.
    """
    if len(word) <= 2:
        return word
    st = _PorterState(word)
    _step1ab(st)
    _step1c(st)
    _apply_rules(st, _STEP2_RULES)
    _apply_rules(st, _STEP3_RULES)
    _step4(st)
    _step5(st)
    return st.word()


def stem(token: str) -> str:
    """Stem one token for the TF-IDF path.

    Tokens starting with ``<``, ``#`` or ``@`` (placeholders, hashtags,
    mentions) and tokens containing a digit pass through unchanged.
    """
    if not token:
        raise ValueError("cannot stem an empty token")
    if token[0] in "<#@" or any(ch.isdigit() for ch in token):
        return token
    return porter_stem(token)


def stem_sequence(ts: TokenSequence) -> TokenSequence:
    return TokenSequence(tokens=[stem(t) for t in ts.tokens], original_len=ts.original_len)


# --- noun/pronoun counting ----------------------------------------------

PRP_LEXICON = frozenset(
    {
        "i", "you", "he", "she", "it", "we", "they",
        "me", "him", "her", "us", "them",
        "myself", "yourself", "himself", "herself", "itself",
        "ourselves", "yourselves", "themselves",
    }
)

# Penn Treebank word tags plus the usual punctuation tags
PTB_TAGS = frozenset(
    {
        "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
        "NN", "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB",
        "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN",
        "VBP", "VBZ", "WDT", "WP", "WP$", "WRB",
        ".", ",", ":", "(", ")", "``", "''", "$", "#",
        "-LRB-", "-RRB-", "-NONE-",
    }
)


@dataclass
class NounCounts:
    nns: int
    prp: int


@dataclass
class PosSource:
    """Where part-of-speech tags come from.

    ``sidecar-file`` carries pre-computed (token, tag) rows per document;
    ``builtin-heuristic`` uses the closed pronoun lexicon for PRP and a
    plural-suffix rule for NNS.
    """

    variant: str
    sidecar: dict[str, list[tuple[str, str]]] | None = field(default=None, repr=False)

    @classmethod
    def builtin(cls) -> "PosSource":
        return cls(variant="builtin-heuristic")

    @classmethod
    def from_mapping(cls, mapping: dict[str, list[tuple[str, str]]]) -> "PosSource":
        return cls(variant="sidecar-file", sidecar=mapping)


def load_pos_sidecar(path: str) -> PosSource:
    """Load a TSV sidecar of ``doc_id<TAB>token<TAB>tag`` rows grouped by
    doc_id. Tags must come from the Penn Treebank inventory."""
    if not os.path.isfile(path):
        raise MissingFile(path)
    mapping: dict[str, list[tuple[str, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise MalformedRow(line_no, "expected doc_id<TAB>token<TAB>tag")
            doc_id, token, tag = cols
            if tag not in PTB_TAGS:
                raise MalformedRow(line_no, f"unknown Penn Treebank tag {tag!r}")
            mapping.setdefault(doc_id, []).append((token, tag))
    return PosSource.from_mapping(mapping)


def _is_plural_noun(token: str) -> bool:
    return (
        len(token) >= 4
        and token.endswith("s")
        and not token.endswith(("ss", "us", "is"))
        and token not in PRP_LEXICON
        and token.isalpha()
    )


def noun_counts(doc_id: str, tokens: TokenSequence, source: PosSource) -> NounCounts:
    """Count NNS- and PRP-tagged tokens for one document.

    Runs on unstemmed tokens (stemming destroys plural suffixes).  A
    token is never counted as both NNS and PRP.
    """
    if source.variant == "sidecar-file":
        if source.sidecar is None or doc_id not in source.sidecar:
            raise MissingSidecarEntry(doc_id)
        rows = source.sidecar[doc_id]
        return NounCounts(
            nns=sum(1 for _, tag in rows if tag == "NNS"),
            prp=sum(1 for _, tag in rows if tag == "PRP"),
        )
    nns = 0
    prp = 0
    for token in tokens:
        if token in PRP_LEXICON:
            prp += 1
        elif _is_plural_noun(token):
            nns += 1
    return NounCounts(nns=nns, prp=prp)
