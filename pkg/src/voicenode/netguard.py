"""Outbound-connection tripwire for emergency mode.

Emergency deployments must not depend on anything off the local
machine. The node's own code never dials out; this guard makes that
observable by recording every ``socket.connect`` attempt the process
makes while enabled (audit hooks cannot be uninstalled, so the hook is
gated on a flag). Inbound accepts do not trigger it.
"""

from __future__ import annotations

import sys
import threading

_lock = threading.Lock()
_installed = False
_enabled = False
_attempts: list[str] = []


def _hook(event: str, args):
    if _enabled and event == "socket.connect":
        with _lock:
            _attempts.append(repr(args[1]))


def enable():
    global _installed, _enabled
    with _lock:
        if not _installed:
            sys.addaudithook(_hook)
            _installed = True
        _enabled = True


def disable():
    global _enabled
    with _lock:
        _enabled = False


def attempts() -> list[str]:
    with _lock:
        return list(_attempts)


def reset():
    with _lock:
        _attempts.clear()
