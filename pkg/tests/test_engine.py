import sys
from pathlib import Path

import pytest

from voicenode import media
from voicenode.engine import ExternalEngine, MockEngine
from voicenode.errors import EngineUnavailable, NoTranscriptChunk, UnsupportedLanguage

FAKE_ENGINE = Path(__file__).with_name("fake_engine.py")


def wav_with(text: str) -> media.WavAudio:
    return media.synth_tone(text)


@pytest.fixture
def mock():
    return MockEngine()


class TestMockAsr:
    def test_reads_embedded_transcript(self, mock):
        result = mock.asr(wav_with("need water at school"), "eng")
        assert result.text == "need water at school"
        assert result.confidence == 1.0
        assert result.lang == "eng"

    def test_missing_transcript_chunk(self, mock):
        audio = media.WavAudio(16000, 1, b"\x00\x00" * 100)
        with pytest.raises(NoTranscriptChunk):
            mock.asr(audio, "eng")

    def test_empty_audio_with_empty_transcript(self, mock):
        audio = media.WavAudio(16000, 1, b"", extra_chunks=[(b"txts", b"")])
        result = mock.asr(audio, "eng")
        assert result.text == ""
        assert result.confidence == 1.0
        assert result.audio_duration_ms == 0

    def test_reports_duration(self, mock):
        audio = media.WavAudio(16000, 1, b"\x00\x00" * 8000,
                               extra_chunks=[(b"txts", b"x")])
        assert mock.asr(audio, "eng").audio_duration_ms == 500


class TestMockT2tt:
    def test_same_language_identity(self, mock):
        assert mock.t2tt("help", "eng", "eng") == "help"

    def test_prefix_rule(self, mock):
        assert mock.t2tt("help", "eng", "fra") == "[fra] help"

    def test_empty_text(self, mock):
        assert mock.t2tt("", "eng", "fra") == "[fra] "

    def test_identity_for_all_languages(self, mock):
        from voicenode.languages import supported_languages
        for lang in supported_languages():
            assert mock.t2tt("T", lang.code, lang.code) == "T"

    def test_unsupported_language(self, mock):
        with pytest.raises(UnsupportedLanguage):
            mock.t2tt("x", "eng", "xxx")


class TestMockS2st:
    def test_composition(self, mock):
        out = mock.s2st(wav_with("help"), "eng", "fra")
        assert out.transcript() == "[fra] help"

    def test_deterministic(self, mock):
        a = media.write_wav(mock.s2st(wav_with("help"), "eng", "fra"))
        b = media.write_wav(mock.s2st(wav_with("help"), "eng", "fra"))
        assert a == b

    def test_output_frequency_matches_rule(self, mock):
        out = mock.s2st(wav_with("help"), "eng", "fra")
        # golden value: first SHA-256 byte of "[fra] help" is 176; 176 % 16 == 0
        assert media.tone_frequency_hz("[fra] help") == 220

    def test_pipeline_exactness_property(self, mock):
        texts = ["", "one", "on the move", "Ωmega über tout", "ça va? 漢字"]
        for text in texts:
            for src, dst in [("eng", "fra"), ("deu", "jpn"), ("cmn", "arb")]:
                out = mock.s2st(wav_with(text), src, dst)
                round_tripped = mock.asr(out, dst)
                assert round_tripped.text == f"[{dst}] {text}"


@pytest.fixture
def external():
    engine = ExternalEngine([sys.executable, str(FAKE_ENGINE)], timeout_s=20)
    yield engine
    engine.close()


class TestExternalEngine:
    def test_handshake_descriptor(self, external):
        assert external.descriptor.engine_id == "fake-normal"
        assert external.descriptor.capabilities == {"asr", "t2tt", "s2st"}
        assert "eng" in external.descriptor.languages

    def test_wire_results_match_in_process(self, external):
        mock = MockEngine()
        audio = wav_with("hello from the wire")

        wire_asr = external.asr(audio, "eng")
        local_asr = mock.asr(audio, "eng")
        assert wire_asr.text == local_asr.text
        assert wire_asr.confidence == local_asr.confidence

        assert external.t2tt("hi", "eng", "fra") == mock.t2tt("hi", "eng", "fra")

        wire_audio = external.s2st(audio, "eng", "fra")
        local_audio = mock.s2st(audio, "eng", "fra")
        assert media.write_wav(wire_audio) == media.write_wav(local_audio)

    def test_language_gate_from_descriptor(self):
        engine = ExternalEngine([sys.executable, str(FAKE_ENGINE), "partial"], timeout_s=20)
        try:
            assert engine.t2tt("x", "eng", "fra") == "[fra] x"
            with pytest.raises(UnsupportedLanguage):
                engine.t2tt("x", "eng", "deu")
        finally:
            engine.close()

    def test_error_response_raises(self):
        engine = ExternalEngine([sys.executable, str(FAKE_ENGINE), "error"], timeout_s=20)
        try:
            with pytest.raises(EngineUnavailable):
                engine.t2tt("x", "eng", "fra")
        finally:
            engine.close()

    def test_timeout_raises(self):
        engine = ExternalEngine([sys.executable, str(FAKE_ENGINE), "slow"], timeout_s=1.0)
        try:
            with pytest.raises(EngineUnavailable):
                engine.t2tt("x", "eng", "fra")
        finally:
            engine.close()

    def test_missing_executable(self):
        with pytest.raises(EngineUnavailable):
            ExternalEngine("/nonexistent/engine-binary")
