"""Small shared helpers: atomic file output, number formatting, compensated sums."""

from __future__ import annotations

import math
import os
import tempfile
from contextlib import contextmanager

import numpy as np

SIG_DIGITS = 15


def fmt(value) -> str:
    """Locale-independent 15-significant-digit rendering."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if math.isnan(v) or math.isinf(v):
        return repr(v)
    return f"{v:.{SIG_DIGITS}g}"


@contextmanager
def atomic_write(path, mode="w"):
    """Write to a sibling temp file and rename over ``path`` on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode, encoding=None if "b" in mode else "utf-8", newline="" if "b" not in mode else None) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_csv(path, header, rows) -> None:
    with atomic_write(path) as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def fsum_complex(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


class KahanSum:
    """Neumaier-compensated running sum that exposes its compensation term."""

    __slots__ = ("total", "comp")

    def __init__(self, total=0.0, comp=0.0):
        self.total = float(total)
        self.comp = float(comp)

    def add(self, x: float) -> None:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self.comp += (self.total - t) + x
        else:
            self.comp += (x - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self.comp


def sinpi(z):
    """sin(pi z) with argument reduction about the nearest integer."""
    z = np.asarray(z)
    m = np.round(z.real)
    r = z - m
    sign = np.where(np.mod(m, 2) == 0, 1.0, -1.0)
    return sign * np.sin(np.pi * r)


def coth(w):
    """Complex coth, stable for large real parts and reduced in the imaginary part."""
    w = np.asarray(w, dtype=complex)
    b = w.imag
    far = np.abs(b) > np.pi / 2
    b = np.where(far, np.remainder(b + np.pi / 2, np.pi) - np.pi / 2, b)
    w = w.real + 1j * b
    s = np.where(w.real >= 0, 1.0, -1.0)
    e = np.exp(-2.0 * s * w)
    return s * (1.0 + e) / (-np.expm1(-2.0 * s * w))

