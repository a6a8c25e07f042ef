"""Porter suffix stripper.

Straight implementation of the classic five-step algorithm, used for the
stem-match stage of the METEOR-style scorer.  Words are processed as-is;
tokens containing non-letters are returned unchanged.
"""

from __future__ import annotations

from functools import lru_cache

_VOWELS = "aeiou"

# (suffix, replacement) tables, longest suffix first.  Within a step the
# first matching suffix decides: if its measure condition fails, no other
# rule in that step is tried.
_STEP2 = [
    ("ational", "ate"),
    ("ization", "ize"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("tional", "tion"),
    ("biliti", "ble"),
    ("entli", "ent"),
    ("ousli", "ous"),
    ("ation", "ate"),
    ("alism", "al"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("ator", "ate"),
    ("eli", "e"),
]

_STEP3 = [
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ness", ""),
    ("ful", ""),
]

_STEP4 = [
    "ement",
    "ance",
    "ence",
    "able",
    "ible",
    "ment",
    "ant",
    "ent",
    "ion",
    "ism",
    "ate",
    "iti",
    "ous",
    "ive",
    "ize",
    "al",
    "er",
    "ic",
    "ou",
]


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return True if i == 0 else not _is_cons(word, i - 1)
    return True


def _measure(word: str, end: int) -> int:
    """Number of vowel-consonant sequences in ``word[:end]``."""
    n = 0
    i = 0
    while i < end and _is_cons(word, i):
        i += 1
    while i < end:
        while i < end and not _is_cons(word, i):
            i += 1
        if i >= end:
            break
        n += 1
        while i < end and _is_cons(word, i):
            i += 1
    return n


def _has_vowel(word: str, end: int) -> bool:
    return any(not _is_cons(word, i) for i in range(end))


def _ends_double_cons(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_cons(word, len(word) - 1)
    )


def _ends_cvc(word: str, end: int) -> bool:
    if end < 3:
        return False
    if _is_cons(word, end - 3) and not _is_cons(word, end - 2) and _is_cons(word, end - 1):
        return word[end - 1] not in "wxy"
    return False


def _step1a(w: str) -> str:
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ies"):
        return w[:-2]
    if w.endswith("ss"):
        return w
    if w.endswith("s"):
        return w[:-1]
    return w


def _step1b(w: str) -> str:
    if w.endswith("eed"):
        if _measure(w, len(w) - 3) > 0:
            return w[:-1]
        return w
    stripped = False
    if w.endswith("ed"):
        if _has_vowel(w, len(w) - 2):
            w = w[:-2]
            stripped = True
    elif w.endswith("ing"):
        if _has_vowel(w, len(w) - 3):
            w = w[:-3]
            stripped = True
    if stripped:
        if w.endswith(("at", "bl", "iz")):
            return w + "e"
        if _ends_double_cons(w) and w[-1] not in "lsz":
            return w[:-1]
        if _measure(w, len(w)) == 1 and _ends_cvc(w, len(w)):
            return w + "e"
    return w


def _step1c(w: str) -> str:
    if w.endswith("y") and _has_vowel(w, len(w) - 1):
        return w[:-1] + "i"
    return w


def _apply_table(w: str, table, min_measure: int) -> str:
    for suffix, replacement in table:
        if w.endswith(suffix):
            stem = len(w) - len(suffix)
            if _measure(w, stem) > min_measure:
                return w[:stem] + replacement
            return w
    return w


def _step4(w: str) -> str:
    for suffix in _STEP4:
        if w.endswith(suffix):
            stem = len(w) - len(suffix)
            if _measure(w, stem) > 1:
                if suffix == "ion" and w[stem - 1] not in "st":
                    return w
                return w[:stem]
            return w
    return w


def _step5(w: str) -> str:
    if w.endswith("e"):
        m = _measure(w, len(w) - 1)
        if m > 1 or (m == 1 and not _ends_cvc(w, len(w) - 1)):
            w = w[:-1]
    if w.endswith("ll") and _measure(w, len(w)) > 1:
        w = w[:-1]
    return w


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Return the Porter stem of ``word``.

    The input is expected to be a lowercase token; anything containing a
    non-letter character is returned unchanged.
    """
    if not word.isalpha() or not word.isascii():
        return word
    if len(word) <= 2:
        # the reference implementation leaves one- and two-letter
        # words alone, so "is" and "as" survive intact
        return word
    w = _step1a(word)
    w = _step1b(w)
    w = _step1c(w)
    w = _apply_table(w, _STEP2, 0)
    w = _apply_table(w, _STEP3, 0)
    w = _step4(w)
    w = _step5(w)
    return w
