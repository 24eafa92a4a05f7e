"""Exception types shared across the package.

Exit-code mapping for the CLI lives in ``cli.py``; library code raises these
(or plain ``ValueError`` for invalid arguments) and never calls ``sys.exit``.
"""

from __future__ import annotations


class ConfigError(Exception):
    """Bad experiment configuration: unknown keys, unsupported regime, bad ranges."""


class GenerationError(Exception):
    """Rejection sampling exhausted its attempt budget."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class CapacityError(Exception):
    """Brute-force oracle invoked above its size guard."""


class ProtocolViolationError(RuntimeError):
    """An agent observed something the protocol rules out (e.g. a collision
    during a collision-free exploration round), indicating desynchronized state."""
