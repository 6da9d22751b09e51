import pytest

from voicenode import languages
from voicenode.errors import UnsupportedLanguage


def test_registry_has_36_languages():
    langs = languages.supported_languages()
    assert len(langs) == 36


def test_registry_order_first_and_last():
    langs = languages.supported_languages()
    assert langs[0].code == "arb"
    assert langs[0].display_name == "Modern Standard Arabic"
    assert langs[-1].code == "vie"
    assert langs[-1].display_name == "Vietnamese"


def test_registry_contains_eng_and_fra():
    codes = [l.code for l in languages.supported_languages()]
    assert "eng" in codes
    assert "fra" in codes


def test_codes_are_three_lowercase_letters():
    for lang in languages.supported_languages():
        assert len(lang.code) == 3
        assert lang.code.isascii() and lang.code.islower() and lang.code.isalpha()


def test_resolve_code_case_insensitive():
    assert languages.resolve("ENG").code == "eng"
    assert languages.resolve("eng").code == "eng"


def test_resolve_display_name():
    assert languages.resolve("French").code == "fra"
    assert languages.resolve("mandarin chinese").code == "cmn"


def test_resolve_unknown_raises():
    with pytest.raises(UnsupportedLanguage):
        languages.resolve("klingon")
    with pytest.raises(UnsupportedLanguage):
        languages.resolve("")


def test_resolve_round_trip_for_every_member():
    for lang in languages.supported_languages():
        assert languages.resolve(lang.code) == lang
        assert languages.resolve(lang.display_name) == lang


def test_registry_immutable_across_calls():
    assert languages.supported_languages() == languages.supported_languages()
