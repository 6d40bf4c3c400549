"""Estimated text geometry from bundled average-advance tables.

No real shaping: widths are per-character advances for a generic
proportional face (scaled per family) or a flat monospace advance,
which keeps layout deterministic and dependency-free.
"""

from __future__ import annotations

import math

# per-mille-of-em advances for ASCII 32..126, generic proportional face
_PROPORTIONAL = {
    " ": 278, "!": 278, '"': 355, "#": 556, "$": 556, "%": 889, "&": 667,
    "'": 191, "(": 333, ")": 333, "*": 389, "+": 584, ",": 278, "-": 333,
    ".": 278, "/": 278, "0": 556, "1": 556, "2": 556, "3": 556, "4": 556,
    "5": 556, "6": 556, "7": 556, "8": 556, "9": 556, ":": 278, ";": 278,
    "<": 584, "=": 584, ">": 584, "?": 556, "@": 1015, "A": 667, "B": 667,
    "C": 722, "D": 722, "E": 667, "F": 611, "G": 778, "H": 722, "I": 278,
    "J": 500, "K": 667, "L": 556, "M": 833, "N": 722, "O": 778, "P": 667,
    "Q": 778, "R": 722, "S": 667, "T": 611, "U": 722, "V": 667, "W": 944,
    "X": 667, "Y": 667, "Z": 611, "[": 278, "\\": 278, "]": 278, "^": 469,
    "_": 556, "`": 333, "a": 556, "b": 556, "c": 500, "d": 556, "e": 556,
    "f": 278, "g": 556, "h": 556, "i": 222, "j": 222, "k": 500, "l": 222,
    "m": 833, "n": 556, "o": 556, "p": 556, "q": 556, "r": 333, "s": 500,
    "t": 278, "u": 556, "v": 500, "w": 722, "x": 500, "y": 500, "z": 500,
    "{": 334, "|": 260, "}": 334, "~": 584,
}
_DEFAULT_ADVANCE = 556
_MONO_ADVANCE = 600

_MONOSPACE = {"menlo", "consolas", "courier new", "courier", "monaco"}

# rough per-family width scaling relative to the generic face
_FAMILY_SCALE = {
    "verdana": 1.10, "georgia": 1.05, "calibri": 0.93,
    "arial": 1.0, "helvetica": 1.0,
}

LINE_HEIGHT_FACTOR = 1.3


def font_px(font_size_pt: int | float) -> int:
    """CSS pixels for a point size (96 dpi reference)."""
    return math.ceil(font_size_pt * 4 / 3)


def line_height(font_size_pt: int | float) -> int:
    return math.ceil(font_px(font_size_pt) * LINE_HEIGHT_FACTOR)


def char_advance(ch: str, font_family: str, font_size_pt: int | float) -> float:
    family = font_family.lower()
    if family in _MONOSPACE:
        mille = _MONO_ADVANCE
        scale = 1.0
    else:
        mille = _PROPORTIONAL.get(ch, _DEFAULT_ADVANCE)
        scale = _FAMILY_SCALE.get(family, 1.0)
    return mille / 1000 * font_px(font_size_pt) * scale


def text_width(text: str, font_family: str, font_size_pt: int | float) -> float:
    """Width of the widest line of the text, unwrapped."""
    best = 0.0
    for part in text.split("\n"):
        w = sum(char_advance(ch, font_family, font_size_pt) for ch in part)
        best = max(best, w)
    return best


def _break_long_word(word: str, font_family: str, size: int | float, max_width: float) -> list[str]:
    pieces: list[str] = []
    current = ""
    width = 0.0
    for ch in word:
        adv = char_advance(ch, font_family, size)
        if current and width + adv > max_width:
            pieces.append(current)
            current, width = ch, adv
        else:
            current += ch
            width += adv
    if current:
        pieces.append(current)
    return pieces


def wrap_text(text: str, font_family: str, font_size_pt: int | float, max_width: float) -> list[str]:
    """Greedy word-boundary wrap; words wider than the limit are hard-broken."""
    lines: list[str] = []
    for paragraph in text.split("\n"):
        words: list[str] = []
        for word in paragraph.split(" "):
            if word and text_width(word, font_family, font_size_pt) > max_width:
                words.extend(_break_long_word(word, font_family, font_size_pt, max_width))
            else:
                words.append(word)
        line = ""
        for word in words:
            candidate = word if not line else line + " " + word
            if line and text_width(candidate, font_family, font_size_pt) > max_width:
                lines.append(line)
                line = word
            else:
                line = candidate
        lines.append(line)
    return lines
