"""Synthetic singular value profiles and Matrix Market ingestion.

All synthetic kinds are exact formula evaluations. The paired kinds lay
out values in generation order (pairs of near-equal values); for
g_min <= alpha - 1 that order is already descending.
"""

from dataclasses import dataclass, field

import numpy as np

from .operators import DenseGram, DiagonalGram
from .validation import as_spectrum

__all__ = [
    "SpectrumSpec",
    "generate",
    "read_matrix_market",
    "MatrixMarketError",
    "as_operator",
]

_KINDS = ("exponential", "polynomial", "paired_gap", "repeated_pairs", "wishart_lb", "explicit")


@dataclass(frozen=True)
class SpectrumSpec:
    """Declarative description of a synthetic singular value profile."""

    kind: str
    n: int = 1000
    alpha: float = 1.1
    beta: float = 1.0
    g_min: float = 0.0
    k: int = 50
    values: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.kind != "explicit" and self.n < 1:
            raise ValueError("n must be positive")

    @property
    def spectrum_id(self):
        if self.kind == "exponential":
            return f"exponential(alpha={self.alpha:g},n={self.n})"
        if self.kind == "polynomial":
            return f"polynomial(beta={self.beta:g},n={self.n})"
        if self.kind == "paired_gap":
            return f"paired_gap(alpha={self.alpha:g},g={self.g_min:g},n={self.n})"
        if self.kind == "repeated_pairs":
            return f"repeated_pairs(alpha={self.alpha:g},k={self.k},n={self.n})"
        if self.kind == "wishart_lb":
            return f"wishart_lb(n={self.n})"
        return f"explicit(n={len(self.values)})"


def generate(spec):
    """Evaluate the spectrum described by `spec`; returns a float vector.

    exponential:    sigma_i = alpha^-i, i = 1..n  (alpha > 1)
    polynomial:     sigma_i = i^-beta, i = 1..n   (beta > 0)
    paired_gap:     pairs {alpha^-j, alpha^-j / (1+g_min)}, j = 0..n/2-1
    repeated_pairs: top k values are k/2 exact pairs alpha^-j, then the
                    tail continues alpha^-(k/2), alpha^-(k/2+1), ...
    wishart_lb:     sigma_i = sqrt(1 - (i/n)^2), i = 1..n
    explicit:       the stored values, validated descending non-negative
    """
    n = spec.n
    if spec.kind == "exponential":
        if spec.alpha <= 1:
            raise ValueError("exponential decay requires alpha > 1")
        return spec.alpha ** -np.arange(1, n + 1, dtype=float)
    if spec.kind == "polynomial":
        if spec.beta <= 0:
            raise ValueError("polynomial decay requires beta > 0")
        return np.arange(1, n + 1, dtype=float) ** -spec.beta
    if spec.kind == "paired_gap":
        if spec.alpha <= 1:
            raise ValueError("paired_gap requires alpha > 1")
        if spec.g_min < 0:
            raise ValueError("g_min must be non-negative")
        if n % 2:
            raise ValueError("paired_gap requires even n")
        top = spec.alpha ** -np.arange(n // 2, dtype=float)
        sigma = np.empty(n)
        sigma[0::2] = top
        sigma[1::2] = top / (1.0 + spec.g_min)
        return sigma
    if spec.kind == "repeated_pairs":
        k = spec.k
        if k % 2 or not 0 < k <= n:
            raise ValueError("repeated_pairs requires even k with 0 < k <= n")
        if spec.alpha <= 1:
            raise ValueError("repeated_pairs requires alpha > 1")
        m = k // 2
        head = np.repeat(spec.alpha ** -np.arange(m, dtype=float), 2)
        tail = spec.alpha ** -np.arange(m, m + n - k, dtype=float)
        return np.concatenate([head, tail])
    if spec.kind == "wishart_lb":
        i = np.arange(1, n + 1, dtype=float)
        return np.sqrt(1.0 - (i / n) ** 2)
    return as_spectrum(np.asarray(spec.values, dtype=float))


class MatrixMarketError(ValueError):
    """Raised with the offending line number on malformed input."""


def _mm_fail(lineno, msg):
    raise MatrixMarketError(f"line {lineno}: {msg}")


def read_matrix_market(path):
    """Read a real general/symmetric Matrix Market file as a dense array.

    Supports coordinate and array formats. Symmetric storage is expanded
    by mirroring. Complex and pattern fields are rejected; parse errors
    carry the line number.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("line 1: empty file")
    banner = lines[0].split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket":
        _mm_fail(1, "missing '%%MatrixMarket object format field symmetry' banner")
    _, obj, fmt, fieldname, symmetry = (w.lower() for w in banner)
    if obj != "matrix":
        _mm_fail(1, f"unsupported object {obj!r}")
    if fmt not in ("coordinate", "array"):
        _mm_fail(1, f"unsupported format {fmt!r}")
    if fieldname not in ("real", "integer", "double"):
        _mm_fail(1, f"unsupported field {fieldname!r} (only real matrices)")
    if symmetry not in ("general", "symmetric"):
        _mm_fail(1, f"unsupported symmetry {symmetry!r}")

    body = [
        (no, ln.strip()) for no, ln in enumerate(lines[1:], start=2)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixMarketError(f"line {len(lines)}: missing size line")
    size_no, size_line = body[0]
    sizes = size_line.split()

    if fmt == "coordinate":
        if len(sizes) != 3:
            _mm_fail(size_no, "coordinate size line must be 'rows cols nnz'")
        try:
            rows, cols, nnz = (int(s) for s in sizes)
        except ValueError:
            _mm_fail(size_no, f"bad size line {size_line!r}")
        if len(body) - 1 != nnz:
            _mm_fail(size_no, f"expected {nnz} entries, found {len(body) - 1}")
        a = np.zeros((rows, cols))
        for no, ln in body[1:]:
            parts = ln.split()
            if len(parts) != 3:
                _mm_fail(no, "coordinate entry must be 'i j value'")
            try:
                i, j = int(parts[0]), int(parts[1])
                v = float(parts[2])
            except ValueError:
                _mm_fail(no, f"bad entry {ln!r}")
            if not (1 <= i <= rows and 1 <= j <= cols):
                _mm_fail(no, f"index ({i},{j}) outside {rows}x{cols}")
            a[i - 1, j - 1] = v
            if symmetry == "symmetric" and i != j:
                a[j - 1, i - 1] = v
        return a

    if len(sizes) != 2:
        _mm_fail(size_no, "array size line must be 'rows cols'")
    try:
        rows, cols = (int(s) for s in sizes)
    except ValueError:
        _mm_fail(size_no, f"bad size line {size_line!r}")
    if symmetry == "symmetric" and rows != cols:
        _mm_fail(size_no, "symmetric array matrices must be square")
    expect = rows * cols if symmetry == "general" else rows * (rows + 1) // 2
    entries = body[1:]
    if len(entries) != expect:
        _mm_fail(size_no, f"expected {expect} values, found {len(entries)}")
    a = np.zeros((rows, cols))
    pos = 0
    for no, ln in entries:
        try:
            v = float(ln)
        except ValueError:
            _mm_fail(no, f"bad value {ln!r}")
        if symmetry == "general":
            j, i = divmod(pos, rows)
        else:
            # column-major lower triangle
            j = 0
            p = pos
            size = rows
            while p >= size:
                p -= size
                size -= 1
                j += 1
            i = j + p
        a[i, j] = v
        if symmetry == "symmetric":
            a[j, i] = v
        pos += 1
    return a


def as_operator(source):
    """Wrap a spectrum, matrix or SpectrumSpec as a Gram operator.

    1-D input is an exact spectrum (a diagonal matrix whose Gram entries
    are sigma_i^2); 2-D input becomes a two-product dense Gram operator.
    """
    if isinstance(source, SpectrumSpec):
        source = generate(source)
    arr = np.asarray(source, dtype=float)
    if arr.ndim == 1:
        return DiagonalGram(arr)
    if arr.ndim == 2:
        return DenseGram(arr)
    raise ValueError("source must be a spectrum (1-D) or matrix (2-D)")
