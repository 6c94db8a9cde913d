"""Independent oracles shared by the test modules."""

import cmath

import numpy as np


def random_symmetric(rng, n, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.T) / 2


def _det3(A):
    return (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
            - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
            + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))


def charpoly_roots(A):
    """Roots of det(lambda - A) for N = 2 (quadratic formula) or N = 3 (Cardano)."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 2:
        tr = A[0, 0] + A[1, 1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        s = cmath.sqrt(tr * tr - 4 * det)
        return np.array([(tr + s) / 2, (tr - s) / 2])
    if n != 3:
        raise ValueError("oracle covers N = 2 and N = 3")
    b = -(A[0, 0] + A[1, 1] + A[2, 2])
    c = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
         + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
    d = -_det3(A)
    p = c - b * b / 3
    q = 2 * b ** 3 / 27 - b * c / 3 + d
    disc = cmath.sqrt((q / 2) ** 2 + (p / 3) ** 3)
    u3 = -q / 2 + disc if abs(-q / 2 + disc) >= abs(-q / 2 - disc) else -q / 2 - disc
    roots = []
    if abs(u3) == 0:
        roots = [-b / 3] * 3
    else:
        u = u3 ** (1 / 3)
        for k in range(3):
            uk = u * cmath.exp(2j * cmath.pi * k / 3)
            roots.append(uk - p / (3 * uk) - b / 3)
    out = []
    for x in roots:  # polish on the polynomial itself
        for _ in range(3):
            f = ((x + b) * x + c) * x + d
            df = (3 * x + 2 * b) * x + c
            if df == 0:
                break
            x = x - f / df
        out.append(x)
    return np.array(out)


def match_error(a, b):
    """Largest distance after optimally pairing two small multisets."""
    from itertools import permutations

    a, b = np.asarray(a), np.asarray(b)
    return min(np.abs(a - b[list(p)]).max() for p in permutations(range(len(b))))


def sqrt_branch(D):
    """Continuous square root along a sampled path of discriminant values."""
    s = np.empty(len(D), dtype=complex)
    s[0] = cmath.sqrt(D[0])
    for k in range(1, len(D)):
        r = cmath.sqrt(D[k])
        s[k] = r if abs(r - s[k - 1]) <= abs(r + s[k - 1]) else -r
    return s


def plateau_scan(x, window, delta):
    """Direct scan: smallest start such that every later window is flat."""
    x = list(x)
    n = len(x)
    for start in range(n - window + 1):
        if all(max(x[j:j + window]) - min(x[j:j + window]) <= delta for j in range(start, n - window + 1)):
            return start
    return None
