import sys
from fractions import Fraction
from functools import lru_cache

from hypothesis import HealthCheck, settings

from aiset_forge.system import load_fixture

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@lru_cache(maxsize=None)
def fixture(name):
    return load_fixture(name)


def free_reduce(word):
    out = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def matmul(A, B):
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0])))
                 for i in range(len(A)))


def matinv2(A):
    (a, b), (c, d) = A
    det = Fraction(a * d - b * c)
    return ((d / det, -b / det), (-c / det, a / det))


def represent(word, mats, inv=None):
    """Matrix of a signed-letter word; mats[i] is the matrix of generator i + 1."""
    n = len(next(iter(mats.values())))
    out = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
    for x in word:
        M = mats[abs(x) - 1] if x > 0 else (inv or {})[abs(x) - 1]
        out = matmul(out, M)
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
