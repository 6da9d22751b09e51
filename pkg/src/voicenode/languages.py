"""Canonical registry of supported languages.

The registry is the complete set of languages the speech pipeline can
produce; 3-letter lowercase codes follow SeamlessM4T conventions so a
real engine adapter needs no remapping. The registry is a frozen,
module-level constant: immutable at runtime and safe for unrestricted
concurrent reads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import UnsupportedLanguage

_CODE_RE = re.compile(r"^[a-z]{3}$")


@dataclass(frozen=True)
class LanguageCode:
    """A supported language: 3-letter lowercase tag plus English name."""

    code: str
    display_name: str

    def __post_init__(self):
        if not _CODE_RE.match(self.code):
            raise ValueError(f"bad language code: {self.code!r}")

    def __str__(self) -> str:
        return self.code


_REGISTRY: tuple[LanguageCode, ...] = tuple(
    LanguageCode(code, name)
    for code, name in [
        ("arb", "Modern Standard Arabic"),
        ("ben", "Bengali"),
        ("cat", "Catalan"),
        ("ces", "Czech"),
        ("cmn", "Mandarin Chinese"),
        ("cym", "Welsh"),
        ("dan", "Danish"),
        ("deu", "German"),
        ("eng", "English"),
        ("est", "Estonian"),
        ("fin", "Finnish"),
        ("fra", "French"),
        ("hin", "Hindi"),
        ("ind", "Indonesian"),
        ("ita", "Italian"),
        ("jpn", "Japanese"),
        ("kor", "Korean"),
        ("mlt", "Maltese"),
        ("nld", "Dutch"),
        ("pes", "Persian"),
        ("pol", "Polish"),
        ("por", "Portuguese"),
        ("ron", "Romanian"),
        ("rus", "Russian"),
        ("slk", "Slovak"),
        ("spa", "Spanish"),
        ("swe", "Swedish"),
        ("swh", "Swahili"),
        ("tel", "Telugu"),
        ("tgl", "Tagalog"),
        ("tha", "Thai"),
        ("tur", "Turkish"),
        ("ukr", "Ukrainian"),
        ("urd", "Urdu"),
        ("uzn", "Northern Uzbek"),
        ("vie", "Vietnamese"),
    ]
)

_BY_KEY: dict[str, LanguageCode] = {}
for _lang in _REGISTRY:
    _BY_KEY[_lang.code] = _lang
    _BY_KEY[_lang.display_name.lower()] = _lang


def supported_languages() -> list[LanguageCode]:
    """All supported languages, in canonical registry order."""
    return list(_REGISTRY)


def resolve(tag: str) -> LanguageCode:
    """Resolve a free-form tag (code or English name, any case).

    Raises UnsupportedLanguage when the tag matches no registry entry.
    """
    key = tag.strip().lower()
    if key and key in _BY_KEY:
        return _BY_KEY[key]
    raise UnsupportedLanguage(f"unsupported language: {tag!r}")


def is_supported(tag: str) -> bool:
    try:
        resolve(tag)
        return True
    except UnsupportedLanguage:
        return False
