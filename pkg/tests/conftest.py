import secrets

import pytest
import requests


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: release-gate criteria with stated tolerances"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one [PASS]/[FAIL] line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not item.get_closest_marker("acceptance"):
        return
    verdict = "PASS" if report.passed else "FAIL"
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    print(f"[{verdict}] {doc}")

from voicenode import config as config_mod
from voicenode import media
from voicenode.node import VoiceNode
from voicenode.server import NodeServer

# Low scrypt cost so test suites that register many users stay fast.
FAST_KDF_N = 256


def make_config(data_dir, **overrides) -> config_mod.NodeConfig:
    values = {
        "bind_addr": "127.0.0.1:0",
        "data_dir": str(data_dir),
        "kdf_n": FAST_KDF_N,
    }
    values.update(overrides)
    return config_mod.load_config(env={}, overrides=values)


def make_wav(text: str, sample_rate: int = 16000, seconds: float | None = None) -> bytes:
    """A valid PCM WAV carrying `text` in its txts chunk."""
    if seconds is None:
        return media.write_wav(media.synth_tone(text))
    frames = b"\x00\x00" * int(sample_rate * seconds)
    audio = media.WavAudio(
        sample_rate=sample_rate,
        channels=1,
        frames=frames,
        extra_chunks=[(b"txts", text.encode("utf-8"))],
    )
    return media.write_wav(audio)


@pytest.fixture
def node(tmp_path):
    n = VoiceNode(make_config(tmp_path / "data"))
    yield n
    n.close()


@pytest.fixture
def server(tmp_path):
    s = NodeServer(make_config(tmp_path / "data")).start()
    yield s
    s.stop()


class ApiClient:
    """Thin requests wrapper for tests: base URL plus optional token."""

    def __init__(self, base_url: str):
        self.base = base_url
        self.http = requests.Session()
        self.token: str | None = None

    def request(self, method: str, path: str, *, token: str | None = None, **kwargs):
        headers = kwargs.pop("headers", {})
        tok = token if token is not None else self.token
        if tok:
            headers["Authorization"] = f"Bearer {tok}"
        return self.http.request(
            method, self.base + path, headers=headers, timeout=30, **kwargs
        )

    def get(self, path, **kw):
        return self.request("GET", path, **kw)

    def post(self, path, **kw):
        return self.request("POST", path, **kw)

    def put(self, path, **kw):
        return self.request("PUT", path, **kw)

    def delete(self, path, **kw):
        return self.request("DELETE", path, **kw)

    def register(self, username: str, lang: str = "eng", password: str | None = None) -> str:
        password = password or ("pw-" + secrets.token_hex(8))
        r = self.post("/api/v1/register", json={
            "username": username, "password": password, "default_lang": lang,
        })
        assert r.status_code == 201, r.text
        return password

    def login(self, username: str, password: str) -> str:
        r = self.post("/api/v1/login", json={"username": username, "password": password})
        assert r.status_code == 200, r.text
        return r.json()["token"]

    def signup(self, username: str, lang: str = "eng") -> str:
        """Register + login; returns the session token."""
        password = self.register(username, lang)
        return self.login(username, password)


@pytest.fixture
def api(server):
    return ApiClient(server.base_url)
