"""The node's HTTP facade.

A threaded stdlib HTTP server binding every module behind /api/v1 and
serving the web client's static files from /. Plain HTTP on the LAN by
default: disaster deployments lack CA infrastructure, integrity comes
from the ledger, and operators can terminate TLS in front if they have
it. Handlers are stateless; module contracts (ledger single-writer,
translation single-flight) provide the concurrency guarantees.
"""

from __future__ import annotations

import json
import re
import threading
import traceback
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from . import config as config_mod
from . import languages, netguard, views
from .errors import (
    AuthError,
    InvalidCredentials,
    NodeError,
    NotFound,
    TooLarge,
    ValidationError,
)
from .identity import UserProfile
from .node import VoiceNode

MAX_JSON_BODY = 1 * 1024 * 1024
MAX_PICTURE_BYTES = 2 * 1024 * 1024
MULTIPART_OVERHEAD = 64 * 1024

def _looks_like_image(data: bytes) -> bool:
    if data.startswith((b"\x89PNG", b"\xff\xd8\xff", b"GIF8")):
        return True
    return data.startswith(b"RIFF") and data[8:12] == b"WEBP"


def parse_multipart(body: bytes, content_type: str) -> dict[str, bytes]:
    """Minimal multipart/form-data parser: field name -> raw bytes."""
    m = re.search(r'boundary="?([^";]+)"?', content_type)
    if not m:
        raise ValidationError("multipart body without a boundary")
    delim = b"--" + m.group(1).encode("ascii")
    fields: dict[str, bytes] = {}
    for section in body.split(delim)[1:]:
        if section.startswith(b"--"):
            break
        part = section[2:-2]  # strip framing CRLFs
        if b"\r\n\r\n" not in part:
            continue
        raw_headers, content = part.split(b"\r\n\r\n", 1)
        name = None
        for line in raw_headers.split(b"\r\n"):
            text = line.decode("utf-8", "replace")
            if text.lower().startswith("content-disposition"):
                nm = re.search(r'name="([^"]*)"', text)
                if nm:
                    name = nm.group(1)
        if name is not None:
            fields[name] = content
    return fields


class NodeRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "voicenode"

    # routing table filled in below the class body
    ROUTES: list[tuple[str, re.Pattern, str, bool]] = []

    @property
    def node(self) -> VoiceNode:
        return self.server.node  # type: ignore[attr-defined]

    def log_message(self, format, *args):  # quiet by default
        pass

    # -- plumbing ------------------------------------------------------------

    def _dispatch(self, method: str):
        split = urlsplit(self.path)
        self._query = parse_qs(split.query)
        try:
            for verb, pattern, handler, needs_auth in self.ROUTES:
                if verb != method:
                    continue
                m = pattern.fullmatch(split.path)
                if not m:
                    continue
                user = self._authenticate() if needs_auth else None
                getattr(self, handler)(user, *m.groups())
                return
            if method == "GET" and not split.path.startswith("/api/"):
                self._serve_static(split.path)
                return
            self._send_error_body(404, "not_found", f"no route {method} {split.path}")
        except NodeError as e:
            self._send_error_body(e.http_status, e.code, e.message)
        except Exception:
            traceback.print_exc()
            self._send_error_body(500, "internal", "internal error")

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def _authenticate(self) -> UserProfile:
        header = self.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise AuthError("missing bearer token")
        return self.node.identities.authenticate(header[len("Bearer "):].strip())

    def _read_body(self, limit: int) -> bytes:
        length = int(self.headers.get("Content-Length", 0) or 0)
        if length > limit:
            raise TooLarge(f"body of {length} bytes exceeds limit {limit}")
        return self.rfile.read(length) if length else b""

    def _json_body(self) -> dict:
        data = self._read_body(MAX_JSON_BODY)
        try:
            doc = json.loads(data.decode("utf-8")) if data else {}
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise ValidationError("body is not valid JSON") from None
        if not isinstance(doc, dict):
            raise ValidationError("JSON body must be an object")
        return doc

    def _param(self, name: str) -> str | None:
        values = self._query.get(name)
        return values[0] if values else None

    def _send(self, status: int, body: bytes, content_type: str):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, obj, status: int = 200):
        self._send(status, views.canonical_json(obj).encode("utf-8"),
                   "application/json; charset=utf-8")

    def _send_error_body(self, status: int, code: str, message: str):
        self._send_json({"error": code, "message": message}, status)

    # -- identity -----------------------------------------------------------

    def h_register(self, _user):
        doc = self._json_body()
        profile = self.node.identities.register(
            str(doc.get("username", "")),
            str(doc.get("password", "")),
            str(doc.get("default_lang", "")),
        )
        self._send_json(_profile_dict(profile), 201)

    def h_login(self, _user):
        doc = self._json_body()
        session = self.node.identities.login(
            str(doc.get("username", "")), str(doc.get("password", ""))
        )
        profile = self.node.identities.profile_by_id(session.user_id)
        self._send_json(
            {
                "token": session.token,
                "expires_at": session.expires_at,
                "profile": _profile_dict(profile),
            }
        )

    def h_get_profile(self, user: UserProfile):
        self._send_json(_profile_dict(user))

    def h_put_profile(self, user: UserProfile):
        doc = self._json_body()
        profile = user
        if "default_lang" in doc:
            profile = self.node.identities.update_default_lang(
                user.user_id, str(doc["default_lang"])
            )
        self._send_json(_profile_dict(profile))

    def h_put_picture(self, user: UserProfile):
        data = self._read_body(MAX_PICTURE_BYTES)
        if not data or not _looks_like_image(data):
            raise ValidationError("picture must be PNG, JPEG, GIF, or WebP bytes")
        ref = self.node.store.blobs.put(data, suffix=".img")
        profile = self.node.identities.set_picture(user.user_id, ref)
        self._send_json(_profile_dict(profile))

    def h_get_picture(self, user: UserProfile):
        if not user.picture_ref:
            raise NotFound("no profile picture set")
        self._send(200, self.node.store.blobs.get(user.picture_ref),
                   "application/octet-stream")

    def h_follow(self, user: UserProfile, username: str):
        edge = self.node.identities.follow(user.user_id, username)
        self._send_json({"follower": user.username, "followee": username,
                         "since": edge.since}, 201)

    def h_unfollow(self, user: UserProfile, username: str):
        self.node.identities.unfollow(user.user_id, username)
        self._send_json({"follower": user.username, "followee": username,
                         "following": False})

    # -- languages -----------------------------------------------------------

    def h_languages(self, _user):
        self._send_json(
            [{"code": l.code, "display_name": l.display_name}
             for l in languages.supported_languages()]
        )

    # -- posts / timeline -------------------------------------------------------

    def h_create_post(self, user: UserProfile):
        content_type = self.headers.get("Content-Type", "")
        if "multipart/form-data" not in content_type:
            raise ValidationError("POST /posts expects multipart/form-data")
        body = self._read_body(self.node.config.max_wav_bytes + MULTIPART_OVERHEAD)
        fields = parse_multipart(body, content_type)
        if "audio" not in fields:
            raise ValidationError('multipart field "audio" is required')
        lang_raw = fields.get("lang")
        lang = lang_raw.decode("utf-8").strip() if lang_raw else None
        post = self.node.posts.create_post(user, fields["audio"], lang or None)
        self._send_json(
            {
                "post_id": post.post_id.hex(),
                "lang": post.lang,
                "transcript": post.transcript,
                "created_at": post.created_at,
                "audio_hash": post.audio_hash.hex(),
                "tx_hash": "0x" + post.tx_hash.hex(),
                "block_height": post.block_height,
                "block_hash": "0x" + post.block_hash.hex(),
                "cost_wei": str(post.cost_wei),
            },
            201,
        )

    def h_timeline(self, user: UserProfile):
        limit = self._param("limit") or "20"
        if not limit.isdigit():
            raise ValidationError("limit must be a positive integer")
        items, next_cursor = self.node.posts.timeline(
            user,
            cursor=self._param("cursor"),
            limit=int(limit),
            lang_override=self._param("lang"),
        )
        self._send_json(
            {"items": [_feed_item_dict(i) for i in items], "next_cursor": next_cursor}
        )

    def h_post_audio(self, user: UserProfile, post_hex: str):
        data, _ = self.node.posts.translated_audio(
            _post_id(post_hex), user, self._param("lang")
        )
        self._send(200, data, "audio/wav")

    def h_post_transcript(self, user: UserProfile, post_hex: str):
        item = self.node.posts.resolve_for_viewer(
            _post_id(post_hex), user, self._param("lang")
        )
        self._send_json(_feed_item_dict(item))

    def h_post_tx(self, user: UserProfile, post_hex: str):
        post_id = _post_id(post_hex)
        viewer_lang = self._param("lang") or user.default_lang.code
        self._send_json(self.node.posts.transaction_details(post_id, viewer_lang))

    # -- ledger ---------------------------------------------------------------

    def h_block(self, _user, height_str: str):
        block = self.node.chain.get_block(int(height_str))
        self._send_json(views.block_dict(block, self.node.chain.block_hash_at(block.height)))

    def h_ledger_tx(self, _user, tx_hex: str):
        tx_hex = tx_hex.removeprefix("0x")
        try:
            tx_hash = bytes.fromhex(tx_hex)
        except ValueError:
            raise ValidationError("tx hash must be hex") from None
        tx, height, block_hash, cost = self.node.chain.get_transaction(tx_hash)
        self._send_json(
            {
                "transaction": views.tx_dict(tx),
                "block_height": height,
                "block_hash": "0x" + block_hash.hex(),
                "cost_wei": str(cost),
            }
        )

    def h_verify(self, _user):
        from_h = int(self._param("from") or 0)
        to_param = self._param("to")
        report = self.node.chain.verify(from_h, int(to_param) if to_param else None)
        self._send_json(views.report_dict(report))

    # -- metrics / health -----------------------------------------------------

    def h_metrics(self, _user):
        report = self.node.metrics.report()
        if self._param("raw") in ("1", "true"):
            report["raw_samples"] = [
                {"stage": t.stage, "duration_ms": t.duration_ms, "at": t.at}
                for t in self.node.metrics.raw_samples()
            ]
        self._send_json(report)

    def h_health(self, _user):
        doc = {
            "mode": self.node.config.mode,
            "height": self.node.chain.block_count,
            "engine": self.node.engine.descriptor.engine_id,
            "ok": True,
        }
        if self.node.config.mode == config_mod.MODE_EMERGENCY:
            doc["outbound_connect_attempts"] = len(netguard.attempts())
        self._send_json(doc)

    # -- static files -----------------------------------------------------------

    def _serve_static(self, path: str):
        root = self.node.config.static_dir
        if not root:
            self._send_error_body(404, "not_found", "no static content configured")
            return
        root_path = Path(root).resolve()
        rel = path.lstrip("/") or "index.html"
        target = (root_path / rel).resolve()
        if not target.is_relative_to(root_path):
            self._send_error_body(404, "not_found", "no such file")
            return
        if not target.is_file() and "." not in rel:
            target = root_path / "index.html"  # hash-routed SPA entry
        if not target.is_file():
            self._send_error_body(404, "not_found", "no such file")
            return
        ctype = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".svg": "image/svg+xml",
            ".png": "image/png",
            ".ico": "image/x-icon",
        }.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), ctype)


def _route(verb: str, pattern: str, handler: str, auth: bool):
    NodeRequestHandler.ROUTES.append((verb, re.compile(pattern), handler, auth))


_HEX_ID = r"([0-9a-fA-F]{32})"

_route("POST", r"/api/v1/register", "h_register", False)
_route("POST", r"/api/v1/login", "h_login", False)
_route("GET", r"/api/v1/profile", "h_get_profile", True)
_route("PUT", r"/api/v1/profile", "h_put_profile", True)
_route("PUT", r"/api/v1/profile/picture", "h_put_picture", True)
_route("GET", r"/api/v1/profile/picture", "h_get_picture", True)
_route("POST", r"/api/v1/users/([A-Za-z0-9_]+)/follow", "h_follow", True)
_route("DELETE", r"/api/v1/users/([A-Za-z0-9_]+)/follow", "h_unfollow", True)
_route("GET", r"/api/v1/languages", "h_languages", False)
_route("POST", r"/api/v1/posts", "h_create_post", True)
_route("GET", r"/api/v1/timeline", "h_timeline", True)
_route("GET", rf"/api/v1/posts/{_HEX_ID}/audio", "h_post_audio", True)
_route("GET", rf"/api/v1/posts/{_HEX_ID}/transcript", "h_post_transcript", True)
_route("GET", rf"/api/v1/posts/{_HEX_ID}/tx", "h_post_tx", True)
_route("GET", r"/api/v1/ledger/blocks/(\d+)", "h_block", False)
_route("GET", r"/api/v1/ledger/tx/((?:0x)?[0-9a-fA-F]{64})", "h_ledger_tx", False)
_route("GET", r"/api/v1/ledger/verify", "h_verify", False)
_route("GET", r"/api/v1/metrics", "h_metrics", False)
_route("GET", r"/api/v1/health", "h_health", False)


def _post_id(post_hex: str) -> bytes:
    return bytes.fromhex(post_hex)


def _profile_dict(profile: UserProfile) -> dict:
    return {
        "username": profile.username,
        "default_lang": profile.default_lang.code,
        "address": profile.address_wire,
        "created_at": profile.created_at,
        "picture_ref": profile.picture_ref,
    }


def _feed_item_dict(item) -> dict:
    out = {
        "post_id": item.post_id.hex(),
        "author": item.author_username,
        "lang": item.lang,
        "created_at": item.created_at,
        "viewer_lang": item.viewer_lang,
        "text": item.text_for_viewer,
        "audio_source": item.audio_source,
        "audio_url": f"/api/v1/posts/{item.post_id.hex()}/audio?lang={item.viewer_lang}",
        "post_tx_hash": "0x" + item.post_tx_hash.hex(),
        "translation_tx_hash": (
            "0x" + item.translation_tx_hash.hex() if item.translation_tx_hash else None
        ),
        "engine_id": item.engine_id,
    }
    if item.translation_error:
        out["translation_error"] = item.translation_error
    return out


class NodeServer:
    """A VoiceNode bound to a listening socket; embeddable in tests."""

    def __init__(self, cfg: config_mod.NodeConfig):
        self.node = VoiceNode(cfg)
        try:
            self.httpd = ThreadingHTTPServer(
                (cfg.bind_host, cfg.bind_port), NodeRequestHandler
            )
        except OSError as e:
            self.node.close()
            raise NodeError(f"cannot bind {cfg.bind_addr}: {e}") from e
        self.httpd.daemon_threads = True
        self.httpd.node = self.node  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def base_url(self) -> str:
        host = self.node.config.bind_host
        if host in ("0.0.0.0", "::"):
            host = "127.0.0.1"
        return f"http://{host}:{self.port}"

    def start(self) -> "NodeServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        self.httpd.serve_forever()

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.node.close()


def serve(cfg: config_mod.NodeConfig) -> NodeServer:
    """Validate config, bind, and return the (not yet started) server."""
    return NodeServer(cfg)
