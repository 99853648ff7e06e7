"""Bijective base-2 ("dyadic") numerals and per-message bit accounting.

Dyadic numerals use the digits 1 and 2 with ordinary binary place weights,
so every positive integer has exactly one representation and there is no
notion of a leading zero::

    1 -> "1", 2 -> "2", 3 -> "11", 4 -> "12", 5 -> "21", 6 -> "22", 7 -> "111"

The code length of ``n`` is ``floor(log2(n + 1))``; this is the quantity the
rest of the package calls ``code_length`` and uses in place of ``log n``.
"""

from __future__ import annotations

from typing import NamedTuple

from .protocol import Election, Message

__all__ = [
    "CodecError",
    "DyadicDomainError",
    "DyadicDecodeError",
    "TAG_BITS",
    "MessageBits",
    "dyadic_encode",
    "dyadic_decode",
    "code_length",
    "message_bits",
]

# Fixed type tag carried by every message class.
TAG_BITS = 2


class CodecError(ValueError):
    pass


class DyadicDomainError(CodecError):
    """Raised when encoding something that is not a positive integer."""


class DyadicDecodeError(CodecError):
    """Raised for empty strings or digits outside {1, 2}."""


class MessageBits(NamedTuple):
    framing: int
    payload: int

    @property
    def total(self) -> int:
        return self.framing + self.payload


def dyadic_encode(n: int) -> str:
    if isinstance(n, bool) or not isinstance(n, int):
        raise DyadicDomainError(f"names must be integers, got {n!r}")
    if n < 1:
        raise DyadicDomainError(f"dyadic encoding needs n >= 1, got {n}")
    # n + 1 in binary with the leading 1 dropped, digits shifted 0->1, 1->2.
    return bin(n + 1)[3:].translate(str.maketrans("01", "12"))


def dyadic_decode(s: str) -> int:
    if not s:
        raise DyadicDecodeError("cannot decode an empty dyadic string")
    n = 0
    for pos, ch in enumerate(s):
        if ch == "1":
            n = 2 * n + 1
        elif ch == "2":
            n = 2 * n + 2
        else:
            raise DyadicDecodeError(f"illegal dyadic digit {ch!r} at position {pos}")
    return n


def code_length(n: int) -> int:
    """Length of the dyadic code of ``n`` (``floor(log2(n + 1))``)."""
    if n < 1:
        raise DyadicDomainError(f"code length needs n >= 1, got {n}")
    return (n + 1).bit_length() - 1


def message_bits(msg: Message) -> MessageBits:
    """Bits charged for one pass of ``msg``: a 2-bit tag plus its dyadic payload."""
    if isinstance(msg, Election):
        return MessageBits(TAG_BITS, code_length(msg.name))
    return MessageBits(TAG_BITS, 0)
