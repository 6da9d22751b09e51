"""Operator and client command line for the node.

One binary, subcommands for everything: simpler to carry into the
field. Machine-readable JSON goes to stdout; human summaries go to
stderr. Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
from pathlib import Path

import requests

from . import config as config_mod
from . import ledger, views
from .errors import NodeError


def _out(obj):
    sys.stdout.write(views.canonical_json(obj))


def _say(text: str):
    print(text, file=sys.stderr)


# -- operator commands ---------------------------------------------------------


def cmd_init(args) -> int:
    from .storage import Store

    store = Store(args.data_dir)
    chain = ledger.Chain(store.chain_path)
    _say(f"initialized store at {args.data_dir} "
         f"(genesis 0x{chain.block_hash_at(0).hex()})")
    chain.close()
    store.close()
    return 0


def cmd_serve(args) -> int:
    from .server import NodeServer

    overrides = {
        "bind_addr": args.bind_addr,
        "data_dir": args.data_dir,
        "mode": args.mode,
        "static_dir": args.static_dir,
    }
    cfg = config_mod.load_config(args.config, overrides=overrides)
    server = NodeServer(cfg)
    _say(f"voicenode listening on {server.base_url} "
         f"(mode={cfg.mode}, engine={cfg.engine}, data={cfg.data_dir})")

    def request_stop(*_):
        # shutdown() blocks until serve_forever returns, so it must not run
        # on the serving (main) thread that the signal interrupted
        threading.Thread(target=server.httpd.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, request_stop)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _require_chain(data_dir: str) -> Path:
    path = Path(data_dir) / "chain.vdl"
    if not path.is_file():
        raise NodeError(f"no chain file at {path}; run `vnode init` first")
    return path


def cmd_ledger_verify(args) -> int:
    path = _require_chain(args.data_dir)
    report = ledger.verify_file(path, args.from_height, args.to_height)
    _out(views.report_dict(report))
    if report.ok:
        _say(f"ok, {report.blocks_checked} block"
             f"{'s' if report.blocks_checked != 1 else ''} checked")
        return 0
    err = report.first_error
    _say(f"FAILED at height {err.height}: {err.reason}")
    return 1


def cmd_ledger_show(args) -> int:
    path = _require_chain(args.data_dir)
    chain = ledger.Chain(path)
    try:
        block = chain.get_block(args.height)
        _out(views.block_dict(block, chain.block_hash_at(args.height)))
    finally:
        chain.close()
    return 0


# -- client commands ---------------------------------------------------------------


def _api(args, method: str, path: str, *, token: str | None = None, **kwargs) -> dict:
    headers = kwargs.pop("headers", {})
    if token:
        headers["Authorization"] = f"Bearer {token}"
    resp = requests.request(
        method, args.server.rstrip("/") + path, headers=headers, timeout=60, **kwargs
    )
    if resp.status_code >= 400:
        try:
            body = resp.json()
        except ValueError:
            body = {"error": "http", "message": resp.text[:200]}
        raise NodeError(f"{resp.status_code} {body.get('error')}: {body.get('message')}")
    return resp.json() if resp.content else {}


def cmd_client_register(args) -> int:
    _out(_api(args, "POST", "/api/v1/register", json={
        "username": args.username, "password": args.password, "default_lang": args.lang,
    }))
    return 0


def cmd_client_login(args) -> int:
    doc = _api(args, "POST", "/api/v1/login", json={
        "username": args.username, "password": args.password,
    })
    _out(doc)
    _say(f"token {doc['token'][:8]}... expires_at={doc['expires_at']}")
    return 0


def cmd_client_follow(args) -> int:
    _out(_api(args, "POST", f"/api/v1/users/{args.username}/follow", token=args.token))
    return 0


def cmd_client_post(args) -> int:
    wav = Path(args.wav).read_bytes()
    data = {"lang": args.lang} if args.lang else {}
    doc = _api(args, "POST", "/api/v1/posts", token=args.token,
               files={"audio": (Path(args.wav).name, wav, "audio/wav")}, data=data)
    _out(doc)
    _say(f"posted {doc['post_id']} tx {doc['tx_hash']}")
    return 0


def cmd_client_timeline(args) -> int:
    query = []
    if args.limit:
        query.append(f"limit={args.limit}")
    if args.cursor:
        query.append(f"cursor={args.cursor}")
    if args.lang:
        query.append(f"lang={args.lang}")
    path = "/api/v1/timeline" + ("?" + "&".join(query) if query else "")
    _out(_api(args, "GET", path, token=args.token))
    return 0


def cmd_client_tx(args) -> int:
    path = f"/api/v1/posts/{args.post}/tx"
    if args.lang:
        path += f"?lang={args.lang}"
    _out(_api(args, "GET", path, token=args.token))
    return 0


def cmd_bench(args) -> int:
    from .bench import run_bench

    pairs = []
    for pair in args.pair:
        src, _, dst = pair.partition(":")
        if not src or not dst:
            raise NodeError(f"--pair wants src:dst, got {pair!r}")
        pairs.append((src, dst))
    report = run_bench(args.server, args.posts, pairs, dump_path=args.dump)
    _out(report)
    return 0


# -- argument tree -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnode",
        description="Multilingual voice social node with an embedded verifiable ledger.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a node data directory")
    p.add_argument("--data-dir", required=True)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("serve", help="run the node")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--bind-addr")
    p.add_argument("--data-dir")
    p.add_argument("--mode", choices=["normal", "emergency"])
    p.add_argument("--static-dir", help="directory of web client assets to serve at /")
    p.set_defaults(func=cmd_serve)

    ledger_parser = sub.add_parser("ledger", help="inspect or verify the chain file")
    ledger_sub = ledger_parser.add_subparsers(dest="ledger_command", required=True)

    p = ledger_sub.add_parser("verify", help="recompute and check every block")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--from", dest="from_height", type=int, default=0)
    p.add_argument("--to", dest="to_height", type=int, default=None)
    p.set_defaults(func=cmd_ledger_verify)

    p = ledger_sub.add_parser("show", help="print one block as JSON")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--height", type=int, required=True)
    p.set_defaults(func=cmd_ledger_show)

    client = sub.add_parser("client", help="talk to a running node")
    client_sub = client.add_subparsers(dest="client_command", required=True)

    def client_parser(name: str, help_text: str, token: bool = True):
        cp = client_sub.add_parser(name, help=help_text)
        cp.add_argument("--server", required=True, help="node base URL")
        if token:
            cp.add_argument("--token", required=True, help="session token from login")
        return cp

    p = client_parser("register", "create an account", token=False)
    p.add_argument("--username", required=True)
    p.add_argument("--password", required=True)
    p.add_argument("--lang", required=True, help="default language code or name")
    p.set_defaults(func=cmd_client_register)

    p = client_parser("login", "get a session token", token=False)
    p.add_argument("--username", required=True)
    p.add_argument("--password", required=True)
    p.set_defaults(func=cmd_client_login)

    p = client_parser("follow", "follow a user")
    p.add_argument("--username", required=True)
    p.set_defaults(func=cmd_client_follow)

    p = client_parser("post", "upload a WAV voice post")
    p.add_argument("--wav", required=True)
    p.add_argument("--lang", help="override the profile default language")
    p.set_defaults(func=cmd_client_post)

    p = client_parser("timeline", "fetch the feed")
    p.add_argument("--limit", type=int)
    p.add_argument("--cursor")
    p.add_argument("--lang")
    p.set_defaults(func=cmd_client_timeline)

    p = client_parser("tx", "show a post's ledger transactions")
    p.add_argument("--post", required=True, help="post id (hex)")
    p.add_argument("--lang")
    p.set_defaults(func=cmd_client_tx)

    p = sub.add_parser("bench", help="drive full post/translate cycles and report latency")
    p.add_argument("--server", required=True)
    p.add_argument("--posts", type=int, default=10)
    p.add_argument("--pair", action="append", default=None,
                   help="src:dst language pair (repeatable)", required=True)
    p.add_argument("--dump", help="write raw samples as CSV")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NodeError as e:
        _say(f"error: {e.message}")
        return 1
    except requests.RequestException as e:
        _say(f"error: {e}")
        return 1
    except OSError as e:
        _say(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
