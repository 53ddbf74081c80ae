"""Sentence splitting, coarse POS tagging and parking-keyword extraction.

Only ``park``/``parked`` need disambiguation (verb vs. place noun), so the
tagger is a small deterministic rule/lexicon tagger. Any callable with the
signature of :func:`pos_tag` can be passed to :func:`extract_parking_sentences`
instead.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .corpus import Review

TAGS = ("VERB", "NOUN", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "PUNCT", "OTHER")
KEYWORDS = ("parking", "park", "parked")


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    review_id: str
    index: int
    text: str
    tokens: tuple[tuple[str, str], ...]
    start: int = 0
    end: int = 0

    @property
    def uid(self) -> str:
        return f"{self.review_id}:{self.index}"


@dataclass(frozen=True)
class ParkingMention:
    sentence: Sentence
    trigger: str
    trigger_pos: str


# --- tokenization -----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\w+(?=n[’']t\b)"          # "do" in "don't"
    r"|n[’']t\b"
    r"|[’'](?:s|re|ve|ll|d|m)\b"
    r"|\w+"
    r"|[^\w\s]",
    re.UNICODE | re.IGNORECASE,
)


def tokenize(text: str) -> list[Token]:
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


# --- sentence splitting -----------------------------------------------------

# Never end a sentence.
TITLES = frozenset("mr mrs ms dr prof st mt ft jr sr rev gen sgt capt lt col hon".split())
# End a sentence only when the next word is capitalised.
ABBREVIATIONS = frozenset(
    "etc e.g i.e vs approx apt no inc ltd co dept est hwy ave blvd rd a.m p.m u.s fig jan feb "
    "mar apr jun jul aug sep sept oct nov dec mon tue wed thu fri sat sun".split()
)

_END_RE = re.compile(r"[.!?]+[\"'”’)\]]*(?=\s|$)")
_WORD_BEFORE_RE = re.compile(r"((?:\w\.)*\w+)$")


def _is_boundary(text: str, m: re.Match) -> bool:
    punct = m.group()
    after = text[m.end():].lstrip()
    if not after:
        return True
    next_upper = after[0].isupper() or not after[0].isalpha()
    if punct.startswith("..."):
        return next_upper
    if not punct.startswith(".") or len(punct.rstrip("\"'”’)]")) > 1:
        return True
    w = _WORD_BEFORE_RE.search(text[: m.start()])
    word = w.group(1).lower() if w else ""
    if word in TITLES:
        return False
    if word in ABBREVIATIONS:
        return next_upper
    return True


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) character spans of sentences; whitespace between spans only."""
    spans = []
    start = len(text) - len(text.lstrip())
    for m in _END_RE.finditer(text):
        if m.end() <= start or not _is_boundary(text, m):
            continue
        spans.append((start, m.end()))
        rest = text[m.end():]
        start = m.end() + len(rest) - len(rest.lstrip())
    stripped_end = len(text.rstrip())
    if start < stripped_end:
        spans.append((start, stripped_end))
    return spans


def split_sentences(review: Review, tagger: Callable | None = None) -> list[Sentence]:
    tagger = tagger or pos_tag
    text = review.text.strip()
    out = []
    for i, (a, b) in enumerate(sentence_spans(text)):
        chunk = text[a:b]
        words = [t.text for t in tokenize(chunk)]
        out.append(Sentence(review.review_id, i, chunk, tuple(zip(words, tagger(words))), a, b))
    return out


# --- tagging ------------------------------------------------------------------

_DET = set("a an the this these those every each some any no another all both either neither".split())
_PRON = set(
    "i me you he him she her it we us they them my your his its our their mine yours ours "
    "theirs myself yourself himself herself itself ourselves themselves everyone everybody "
    "someone somebody anyone anybody nobody nothing something everything anything who whom "
    "whose what which one".split()
)
_POSSESSIVE = set("my your his her its our their".split())
_SUBJECT = set("i you we they he she it everyone everybody someone somebody anyone nobody who".split())
_ADP = set(
    "of in on at by for with from to into onto across behind near through over under above below "
    "between among around about after before during without within along against toward towards "
    "past per via like since until till because while if although though whereas unless than "
    "upon off beside besides beyond inside throughout despite opposite".split()
)
_CONJ = set("and or but nor yet".split())
_INTERJ = set("wow ok okay oh yes yeah hey ugh lol omg thanks please".split())
_MODAL = set("can could will would shall should may might must wo ca".split())
_BE = set("is are was were be been being am 's 're 'm ’s ’re ’m".split())
_AUX_DO = set("do does did".split())
_ADV = set(
    "not n't n’t very really so too also just only always never often usually sometimes here "
    "there now then again away forever still even almost quite rather ever already soon later "
    "once twice outside inside nearby anywhere everywhere somewhere back down up out how when "
    "where why well else instead ahead together maybe perhaps definitely especially".split()
)
_ADJ = set(
    "good great bad nice easy hard free clean dirty small big large huge little tight full empty "
    "cheap expensive safe close far new old busy quick slow long short wide narrow dark bright "
    "best worst better worse ample plenty enough many much more most few several other same "
    "friendly lovely ugly costly likely lonely elderly early late next last first second third "
    "convenient difficult terrible awful horrible amazing excellent fine poor limited available "
    "open closed quiet loud crowded packed nearby main whole high low hot cold fast able sure "
    "happy sad rude polite kind fresh nasty cramped spacious reasonable ridiculous impossible "
    "okay decent beautiful wonderful perfect awesome handicap accessible valid extra own".split()
)
_ADJ.discard("plenty")
_VERB = set(
    "is are was were be been being am have has had having do does did done can could will would "
    "shall should may might must wo ca get got gets getting gotten go goes went gone make makes "
    "made take takes took taken find finds found come comes came see sees saw seen say says said "
    "give gave given know knew known think thought want wants need needs try tries tried let put "
    "pay pays paid leave leaves left drive drives drove driven keep kept feel felt bring brought "
    "use uses look looks seem seems tell told recommend offer offers offered love loves "
    "run ran return ask call work arrive arrives spent spend spends got hold held sit sat stand "
    "stood buy bought eat ate sell sold meet met".split()
) | {"'ve", "'ll", "'d", "’ve", "’ll", "’d"}
# Words that are nouns by default but verbs in verb contexts.
_NOUN_VERB = set(
    "park parks walk walks cost costs fill fills patrol patrols visit visits close closes tip "
    "tips line lines stop stops turn turns drop drops charge charges block blocks book books "
    "check checks view views guard guards wait waits help helps lack lacks rush rushes".split()
)
_NUMBER_WORDS = set("zero one two three four five six seven eight nine ten eleven twelve twenty hundred".split())
_LY_NOUNS = set("family supply ally belly rally reply fly assembly italy july rely apply".split())

_ADJ_SUFFIXES = ("ous", "ful", "able", "ible", "ive", "less", "ic", "al", "ish")


def _lexical_tag(word: str) -> str:
    w = word.lower()
    if not any(ch.isalnum() for ch in w):
        return "PUNCT"
    if w.replace(".", "", 1).replace(",", "").isdigit() or w in _NUMBER_WORDS - {"one"}:
        return "NUM"
    if w in ("'s", "’s"):
        return "OTHER"
    for tag, lex in (("DET", _DET), ("PRON", _PRON), ("ADP", _ADP)):
        if w in lex:
            return tag
    if w in _CONJ or w in _INTERJ:
        return "OTHER"
    if w in _ADV:
        return "ADV"
    if w in _VERB:
        return "VERB"
    if w in _ADJ:
        return "ADJ"
    if w in _NOUN_VERB:
        return "NOUN"
    if len(w) > 4 and w.endswith("ly") and w not in _LY_NOUNS:
        return "ADV"
    if len(w) > 4 and (w.endswith("ed") or w.endswith("ing")):
        return "VERB"
    if len(w) > 4 and w.endswith(_ADJ_SUFFIXES):
        return "ADJ"
    return "NOUN"


def _is_plural(word: str) -> bool:
    w = word.lower()
    return len(w) > 3 and w.endswith("s") and not w.endswith("ss")


def pos_tag(tokens: Sequence[str]) -> list[str]:
    """Coarse tag per token, deterministic."""
    tags = [_lexical_tag(t) for t in tokens]
    words = [t.lower() for t in tokens]
    n = len(tokens)
    first = next((i for i, t in enumerate(tags) if t != "PUNCT"), 0)

    def nxt(i):
        return tags[i + 1] if i + 1 < n else "PUNCT"

    for i, w in enumerate(words):
        prev_w = words[i - 1] if i > 0 else ""
        prev_t = tags[i - 1] if i > 0 else "PUNCT"
        if w == "there":
            tags[i] = "PRON" if i + 1 < n and words[i + 1] in _BE else "ADV"
        elif w == "that":
            tags[i] = "DET" if nxt(i) in ("NOUN", "ADJ") else "PRON"
        elif w in ("'s", "’s") and (prev_t == "PRON" or prev_w in ("there", "here", "that", "what")):
            tags[i] = "VERB"
        elif tags[i] == "VERB" and w.endswith("ing") and w not in _VERB:
            after = nxt(i)
            after_w = words[i + 1] if i + 1 < n else ""
            if prev_t in ("DET", "ADJ", "NUM", "NOUN") or prev_w in _POSSESSIVE:
                tags[i] = "NOUN"
            elif i == first and (after in ("VERB", "ADP", "PUNCT", "NOUN", "OTHER")
                                 or after_w in _NOUN_VERB):
                tags[i] = "NOUN"
        elif tags[i] == "VERB" and w.endswith("ed") and w not in _VERB:
            if prev_t == "DET":
                tags[i] = "ADJ"
        elif w in _NOUN_VERB:
            tags[i] = _resolve_noun_verb(i, tokens, words, tags, first)
    return tags


def _resolve_noun_verb(i, tokens, words, tags, first) -> str:
    w = words[i]
    n = len(words)
    prev_w = words[i - 1] if i > 0 else ""
    prev_t = tags[i - 1] if i > 0 else "PUNCT"
    after_t = tags[i + 1] if i + 1 < n else "PUNCT"
    plural_form = _is_plural(w)
    if i == first:
        if plural_form:
            return "NOUN"
        nxt_tok = tokens[i + 1] if i + 1 < n else ""
        if tokens[i][:1].isupper() and nxt_tok[:1].isupper():
            return "NOUN"
        return "NOUN" if after_t == "VERB" else "VERB"
    if tokens[i][:1].isupper():
        return "NOUN"
    if prev_w in _POSSESSIVE or prev_t in ("DET", "ADJ", "NUM"):
        return "NOUN"
    if prev_w in ("to",) or prev_w in _MODAL or prev_w in _AUX_DO or prev_w in ("not", "n't", "n’t", "please"):
        return "VERB"
    if prev_t == "ADP":
        return "NOUN"
    if prev_w in _SUBJECT or prev_t == "ADV":
        return "VERB"
    if prev_t == "OTHER" and prev_w in _CONJ:
        return "VERB" if after_t in ("ADP", "DET", "PRON", "ADV") else "NOUN"
    if prev_t == "NOUN":
        agrees = plural_form != _is_plural(prev_w)
        if agrees and after_t in ("ADP", "DET", "PRON", "ADV", "NUM"):
            return "VERB"
        return "NOUN"
    return "NOUN"


# --- extraction -------------------------------------------------------------------


def parking_trigger(sentence: Sentence) -> tuple[str, str] | None:
    """First keyword occurrence that qualifies, as (trigger, its tag)."""
    for word, tag in sentence.tokens:
        w = word.lower()
        if w == "parking":
            return w, tag
        if w in ("park", "parked") and tag == "VERB":
            return w, tag
    return None


def iter_sentences(reviews: Iterable[Review], tagger: Callable | None = None) -> Iterator[Sentence]:
    for review in reviews:
        yield from split_sentences(review, tagger)


def extract_parking_sentences(reviews: Iterable[Review], tagger: Callable | None = None) -> list[ParkingMention]:
    out = []
    for sent in iter_sentences(reviews, tagger):
        hit = parking_trigger(sent)
        if hit is not None:
            out.append(ParkingMention(sent, hit[0], hit[1]))
    return out


def mention_record(m: ParkingMention) -> dict:
    return {
        "review_id": m.sentence.review_id,
        "sentence_index": m.sentence.index,
        "sentence_uid": m.sentence.uid,
        "trigger": m.trigger,
        "text": m.sentence.text,
    }
