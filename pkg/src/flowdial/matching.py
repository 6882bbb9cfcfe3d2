"""Deterministic guard matching for decision branches.

The cascade is fixed: (1) a guard label literally contained in the input,
rightmost occurrence winning so trailing answers beat words quoted from the
condition; (2) an affirmative/negative keyword lexicon mapped onto yes/no
style guards.  Anything else is an unmatched-guard error.  ASCII keywords
match on word boundaries so "no" never fires inside "now" or "know".
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Sequence


class UnmatchedGuardError(Exception):
    def __init__(self, options: Sequence[str]):
        self.options = list(options)
        super().__init__(f"input matches none of the guards {self.options!r}")


def _norm(text: str) -> str:
    return unicodedata.normalize("NFC", text).casefold()


def _is_ascii_word(token: str) -> bool:
    return bool(re.fullmatch(r"[a-z0-9]+", token))


def find_token(haystack: str, token: str) -> int:
    """End offset of the rightmost match of a normalized token, -1 if absent."""
    haystack = _norm(haystack)
    token = _norm(token)
    if not token:
        return -1
    if _is_ascii_word(token):
        last = -1
        for m in re.finditer(
            rf"(?<![a-z0-9]){re.escape(token)}(?![a-z0-9])", haystack
        ):
            last = m.end()
        return last
    pos = haystack.rfind(token)
    return -1 if pos == -1 else pos + len(token)


def contains_token(haystack: str, token: str) -> bool:
    return find_token(haystack, token) >= 0


AFFIRMATIVE_GUARDS = ("yes", "y", "true", "是", "需要")
NEGATIVE_GUARDS = ("no", "n", "false", "否", "不需要")


@dataclass(frozen=True)
class GuardLexicon:
    """Keyword phrases classifying free-form input as yes-like or no-like."""

    affirmative: tuple[str, ...] = ("yes", "是", "需要")
    negative: tuple[str, ...] = ("no", "否", "不需要")

    def extended(
        self,
        affirmative: Sequence[str] = (),
        negative: Sequence[str] = (),
    ) -> "GuardLexicon":
        return GuardLexicon(
            self.affirmative + tuple(affirmative),
            self.negative + tuple(negative),
        )

    def classify(self, text: str) -> str | None:
        """"affirmative", "negative", or None; the longest keyword hit wins
        (so 不需要 beats its substring 需要)."""
        best_len = -1
        best: str | None = None
        for cls, keywords in (
            ("affirmative", self.affirmative),
            ("negative", self.negative),
        ):
            for kw in keywords:
                if contains_token(text, kw) and len(kw) > best_len:
                    best_len = len(kw)
                    best = cls
        return best


DEFAULT_LEXICON = GuardLexicon()


def match_guard(
    guards: Sequence[str],
    user_input: str,
    lexicon: GuardLexicon = DEFAULT_LEXICON,
) -> str:
    """Pick the guard the input selects, or raise UnmatchedGuardError."""
    best: tuple[int, int] = (-1, -1)
    best_guard: str | None = None
    for guard in guards:
        end = find_token(user_input, guard)
        if end == -1:
            continue
        # Rightmost match wins; on a shared end the longer guard engulfs
        # the shorter one (e.g. 不需要 over 需要).
        rank = (end, len(_norm(guard)))
        if rank > best:
            best = rank
            best_guard = guard
    if best_guard is not None:
        return best_guard

    cls = lexicon.classify(user_input)
    if cls is not None:
        wanted = AFFIRMATIVE_GUARDS if cls == "affirmative" else NEGATIVE_GUARDS
        for guard in guards:
            if _norm(guard) in wanted:
                return guard
    raise UnmatchedGuardError(guards)
