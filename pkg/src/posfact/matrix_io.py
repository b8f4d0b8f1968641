"""Matrix text format and JSON encoding.

Text format::

    # comment
    2 2
    1 (1,-0.5)
    0 0

The first non-comment line holds ``rows cols``; the entries follow in
row-major order, whitespace separated, each either ``re`` or ``(re,im)``.
Numbers are written with 17 significant digits so a write/read cycle is
bit-exact.
"""

from __future__ import annotations

import re

import numpy as np

from .core import as_matrix
from .errors import InputError

_COMPLEX = re.compile(r"^\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)$")


def _fmt(x: float) -> str:
    return "%.17g" % x


def format_entry(z: complex) -> str:
    z = complex(z)
    if z.imag == 0 and not np.signbit(z.imag):
        return _fmt(z.real)
    return f"({_fmt(z.real)},{_fmt(z.imag)})"


def _tokens(text: str):
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        # keep "(re, im)" together even when written with a space
        line = re.sub(r"\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)", r"(\1,\2)", line)
        yield from line.split()


def parse_entry(tok: str) -> complex:
    m = _COMPLEX.match(tok)
    try:
        if m:
            return complex(float(m.group(1)), float(m.group(2)))
        return complex(float(tok), 0.0)
    except ValueError:
        raise InputError(f"bad matrix entry {tok!r}") from None


def loads(text: str) -> np.ndarray:
    toks = list(_tokens(text))
    if len(toks) < 2:
        raise InputError("matrix text needs a 'rows cols' header")
    try:
        rows, cols = int(toks[0]), int(toks[1])
    except ValueError:
        raise InputError(f"bad header {toks[0]!r} {toks[1]!r}") from None
    if rows < 1 or cols < 1:
        raise InputError(f"matrix must be at least 1x1, got {rows}x{cols}")
    body = toks[2:]
    if len(body) != rows * cols:
        raise InputError(f"expected {rows * cols} entries, found {len(body)}")
    vals = np.array([parse_entry(t) for t in body], dtype=np.complex128)
    return as_matrix(vals.reshape(rows, cols))


def dumps(M, comment: str | None = None) -> str:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise InputError("only 2-D matrices can be written")
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"{M.shape[0]} {M.shape[1]}")
    for row in M:
        lines.append(" ".join(format_entry(z) for z in row))
    return "\n".join(lines) + "\n"


def load(path) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def save(path, M, comment: str | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(M, comment))


def to_json(M) -> dict:
    """``{"rows", "cols", "re", "im"}`` with row-major nested lists."""
    M = np.asarray(M, dtype=np.complex128)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "re": M.real.tolist(),
        "im": M.imag.tolist(),
    }


def from_json(obj) -> np.ndarray:
    try:
        re_ = np.asarray(obj["re"], dtype=float)
        im_ = np.asarray(obj.get("im", np.zeros_like(re_)), dtype=float)
        M = re_ + 1j * im_
        if M.shape != (obj["rows"], obj["cols"]):
            raise InputError("declared shape does not match data")
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad JSON matrix: {exc}") from None
    return as_matrix(M)
