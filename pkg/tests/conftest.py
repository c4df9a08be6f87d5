"""Shared spec builders for the test suite."""
from __future__ import annotations

import charfred as cf

ZERO = cf.parse("0")
ONE = cf.parse("1")


def zero_b(n: int = 3):
    return tuple(tuple(ZERO for _ in range(n)) for _ in range(n))


def cyclic_b(g1_reads, g2_reads, g3_reads):
    """Forward 3x3 cyclic pattern: rows read (g3, g1, g2) columns."""
    b = [[ZERO] * 3 for _ in range(3)]
    b[0][2] = g1_reads
    b[1][0] = g2_reads
    b[2][1] = g3_reads
    return tuple(tuple(row) for row in b)


def identity_spec(alpha=(0.0, 0.0, 0.0), beta=(0.0, 0.0, 0.0),
                  gamma=(ZERO, ZERO, ZERO), b=None, orientation=cf.FORWARD):
    return cf.SystemSpec(n=3, k=2, l=1, a1=[[1.0]], a2=[[1.0]], a3=[[1.0]],
                         alpha=alpha, beta=beta, gamma=gamma,
                         b=b if b is not None else zero_b(),
                         orientation=orientation)


def coupled_spec():
    """Contractive cyclic system with variable coefficients."""
    return identity_spec(
        alpha=(0.5, 1.0, -1.0), beta=(1.0, -1.0, 0.5),
        gamma=(cf.parse("0.3"), ZERO, cf.parse("-0.2")),
        b=cyclic_b(cf.parse("0.4*cos(2*pi*y)"), cf.parse("0.3"),
                   cf.parse("0.2*sin(2*pi*t)")))
