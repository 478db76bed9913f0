"""Matrix text files and atomic output.

A matrix file starts with a line "n m" followed by n rows of m whitespace-separated
decimal literals. Values are truncated onto the target fixed-point grid exactly
(the decimal is parsed as a rational, not a float).
"""

from __future__ import annotations

import os
import re
import tempfile
from decimal import Context, Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

from .fixedpoint import FixedFormat, FixedMatrix

# enough digits for any 64-bit word and fraction length
_WIDE = Context(prec=100)

_LITERAL = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


class MatrixParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _tokens(line: str):
    for m in re.finditer(r"\S+", line):
        yield m.start() + 1, m.group()


def parse_matrix(text: str, fmt: FixedFormat) -> FixedMatrix:
    lines = text.splitlines()
    if not lines:
        raise MatrixParseError(1, 1, "empty file")
    header = list(_tokens(lines[0]))
    if len(header) != 2 or not all(t.isdigit() for _, t in header):
        raise MatrixParseError(1, 1, 'expected a header "n m" of two non-negative integers')
    n, m = int(header[0][1]), int(header[1][1])
    if n == 0 or m == 0:
        raise MatrixParseError(1, 1, "matrix dimensions must be positive")
    body = lines[1:]
    raw = np.zeros((n, m), dtype=np.int64)
    scale = 1 << fmt.frac_bits
    row = 0
    for k, line in enumerate(body, start=2):
        toks = list(_tokens(line))
        if not toks:
            continue
        if row == n:
            raise MatrixParseError(k, toks[0][0], f"more than {n} rows")
        if len(toks) != m:
            col = toks[m][0] if len(toks) > m else len(line) + 1
            raise MatrixParseError(k, col, f"expected {m} values, found {len(toks)}")
        for j, (col, tok) in enumerate(toks):
            if not _LITERAL.fullmatch(tok):
                raise MatrixParseError(k, col, f"not a decimal literal: {tok!r}")
            v = (Fraction(tok) * scale).__floor__()
            if not fmt.min_raw <= v <= fmt.max_raw:
                raise MatrixParseError(k, col, f"{tok} does not fit {fmt.word_bits}-bit words with {fmt.frac_bits} fraction bits")
            raw[row, j] = v
        row += 1
    if row < n:
        raise MatrixParseError(len(lines) + 1, 1, f"expected {n} rows, found {row}")
    return FixedMatrix(raw, fmt)


def read_matrix(path: str | Path, fmt: FixedFormat) -> FixedMatrix:
    return parse_matrix(Path(path).read_text(), fmt)


def format_matrix(M: FixedMatrix) -> str:
    """Exact decimal rendering, so reading the file back returns the same words."""
    n, m = M.shape
    f = M.format.frac_bits
    five = 5**f

    def lit(v: int) -> str:
        # v / 2^f = v 5^f / 10^f, exact at any length
        return format(Decimal(v * five).scaleb(-f, _WIDE), "f")

    rows = [" ".join(lit(int(v)) for v in r) for r in M.raw]
    return f"{n} {m}\n" + "\n".join(rows) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory and rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path: str | Path, M: FixedMatrix) -> None:
    atomic_write_text(path, format_matrix(M))
