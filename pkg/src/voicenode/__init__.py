"""Offline-capable multilingual voice social network node.

A single-process server for local networks: users post voice messages
that are transcribed, logged on an embedded hash-chained ledger, and
delivered to followers in each follower's language as text and
synthesized speech. Every post and translation is a signed, verifiable
ledger transaction.
"""

__version__ = "0.1.0"
