"""Substitution matrix, primitivity, eigen-data and the bounded-displacement dichotomy."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import DefectiveEigenspaceError, NotPrimitiveError

UNIFORM = "uniformly-spread-regime"
CRITICAL = "critical"
CONTINUUM = "continuum-regime"

DEFAULT_TOLERANCE = 1e-9
C0_START = 10


def substitution_matrix(r) -> tuple:
    """``a[i][j]`` = number of type-i tiles in rho(T_j)."""
    n = r.n
    a = [[0] * n for _ in range(n)]
    for j in range(n):
        for c in r.children[j]:
            a[c.prototile_id][j] += 1
    return tuple(tuple(row) for row in a)


def mat_mul(a, b) -> tuple:
    n, m, p = len(a), len(b), len(b[0])
    return tuple(tuple(sum(a[i][l] * b[l][j] for l in range(m)) for j in range(p)) for i in range(n))


def mat_vec(a, v) -> tuple:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def transpose(a) -> tuple:
    return tuple(zip(*a))


def identity(n: int) -> tuple:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def mat_pow(a, k: int) -> tuple:
    """Exact a**k by repeated squaring."""
    if k < 0:
        raise ValueError("negative matrix power")
    result = identity(len(a))
    base = tuple(tuple(row) for row in a)
    while k:
        if k & 1:
            result = mat_mul(result, base)
        k >>= 1
        if k:
            base = mat_mul(base, base)
    return result


def count_vector(m, seed: Sequence[int], k: int) -> tuple:
    """M^k seed with arbitrary-precision integers."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return mat_vec(mat_pow(m, k), tuple(seed))


def primitivity(m) -> tuple:
    """(is_primitive, first all-positive power) scanning up to Wielandt's bound n^2 - 2n + 2."""
    n = len(m)
    if any(x < 0 for row in m for x in row):
        return False, None
    pattern = tuple(tuple(int(x > 0) for x in row) for row in m)
    power = pattern
    for k in range(1, n * n - 2 * n + 3):
        if all(x > 0 for row in power for x in row):
            return True, k
        power = tuple(tuple(int(x > 0) for x in row) for row in mat_mul(power, pattern))
    return False, None


def count_difference_sequence(m, p_vec, q_vec, k_max: int, volumes=None) -> list:
    """Entry k is |<1, M^k (p - q)>|, exact.

    With ``volumes`` the equal-volume hypothesis <u1, p> = <u1, q> is checked first.
    """
    if len(p_vec) != len(q_vec):
        raise ValueError("count vectors differ in length")
    if volumes is not None:
        vp = sum(Fraction(v) * x for v, x in zip(volumes, p_vec))
        vq = sum(Fraction(v) * x for v, x in zip(volumes, q_vec))
        if vp != vq:
            raise ValueError(f"patches have different volumes ({vp} vs {vq})")
    diff = tuple(x - y for x, y in zip(p_vec, q_vec))
    out = []
    for _ in range(k_max + 1):
        out.append(abs(sum(diff)))
        diff = mat_vec(m, diff)
    return out


# ---------------------------------------------------------------- eigen-data


def _nullspace_exact(a) -> list:
    """Basis of the right null space of a Fraction matrix via reduced row echelon form."""
    rows = [list(map(Fraction, r)) for r in a]
    n = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * n
        v[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -rows[i][fcol]
        basis.append(tuple(v))
    return basis


def _normalize(v):
    """Scale so the first entry that is not (numerically) zero equals 1."""
    if all(isinstance(x, Fraction) for x in v):
        lead = next(x for x in v if x != 0)
        return tuple(x / lead for x in v)
    arr = np.asarray(v, dtype=complex)
    idx = int(np.argmax(np.abs(arr) > 1e-12 * np.abs(arr).max()))
    arr = arr / arr[idx]
    return tuple(complex(x) for x in arr)


def _sort_key(value):
    z = complex(value)
    return (-abs(z), -z.real, -z.imag)


@dataclass(frozen=True)
class Eigenspace:
    value: object  # Fraction when exact, complex otherwise
    multiplicity: int
    basis: tuple
    exact: bool

    @property
    def defective(self) -> bool:
        return len(self.basis) < self.multiplicity

    @property
    def modulus(self) -> float:
        return abs(complex(self.value))

    def ones_sums(self) -> tuple:
        return tuple(sum(v) for v in self.basis)


def _exact_eigenspaces(m):
    import sympy as sp

    n = len(m)
    poly = sp.Matrix(m).charpoly()
    roots = sp.roots(poly, filter="Q")
    if sum(roots.values()) != n:
        return None
    spaces = []
    for root, mult in roots.items():
        lam = Fraction(int(sp.numer(root)), int(sp.denom(root)))
        shifted = [[Fraction(m[i][j]) - (lam if i == j else 0) for j in range(n)] for i in range(n)]
        basis = tuple(_normalize(v) for v in _nullspace_exact(shifted))
        spaces.append(Eigenspace(lam, mult, basis, True))
    return spaces


def _numeric_eigenspaces(m, cluster_tol=1e-6):
    a = np.asarray(m, dtype=float)
    n = a.shape[0]
    values = np.linalg.eigvals(a)
    scale = max(1.0, float(np.abs(values).max()))
    clusters = []
    for v in sorted(values, key=_sort_key):
        for c in clusters:
            if abs(c[0] - v) <= cluster_tol * scale:
                c.append(v)
                break
        else:
            clusters.append([v])
    spaces = []
    for c in clusters:
        lam = complex(np.mean(c))
        if abs(lam.imag) <= cluster_tol * scale:
            lam = complex(lam.real, 0.0)
        shifted = a.astype(complex) - lam * np.eye(n)
        _, s, vh = np.linalg.svd(shifted)
        null = [vh[i].conj() for i in range(n) if s[i] <= cluster_tol * scale * n]
        basis = tuple(_normalize(v) for v in null)
        spaces.append(Eigenspace(lam, len(c), basis, False))
    return spaces


def eigenspaces(m, exact_max_n: int = 3) -> list:
    """Eigenspaces sorted by decreasing modulus; exact when the characteristic polynomial splits over Q."""
    spaces = None
    if len(m) <= exact_max_n:
        spaces = _exact_eigenspaces(m)
    if spaces is None:
        spaces = _numeric_eigenspaces(m)
    return sorted(spaces, key=lambda s: _sort_key(s.value))


def dth_root(x: Fraction, d: int):
    """Exact rational d-th root of ``x`` or None."""
    x = Fraction(x)
    if x < 0:
        return None

    def iroot(k):
        r = int(round(k ** (1.0 / d))) if k < 2**1000 else int(mpmath.nint(mpmath.root(k, d)))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**d == k:
                return cand
        return None

    num, den = iroot(x.numerator), iroot(x.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


@dataclass
class SpectralReport:
    matrix: tuple
    dimension: int
    eigenspaces: list
    u1: tuple
    lambda1: object
    threshold: object  # lambda1 ** ((d-1)/d); Fraction when exact
    t_index: int | None
    lambda_t: object | None
    v_t: tuple | None
    classification: str
    exact: bool
    primitive_power: int
    critical_modulus: list = field(default_factory=list)  # eigenspaces sharing |lambda_t|
    condition2: list = field(default_factory=list)  # per critical eigenvalue, when P, Q supplied
    c0_estimate: float | None = None

    @property
    def eigenvalues(self) -> list:
        out = []
        for s in self.eigenspaces:
            out.extend([s.value] * s.multiplicity)
        return out

    @property
    def right_eigenvectors(self) -> list:
        return [s.basis[0] if s.basis else None for s in self.eigenspaces]

    @property
    def growth_ratio(self):
        """|lambda_t| / lambda1^((d-1)/d)."""
        if self.lambda_t is None:
            return None
        if self.exact and isinstance(self.threshold, Fraction) and isinstance(self.lambda_t, Fraction):
            return abs(self.lambda_t) / self.threshold
        return mpmath.mpf(abs(complex(self.lambda_t))) / mpmath.mpf(_as_mpf(self.threshold))


def _as_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _ones_nonzero(s: Eigenspace, tol: float):
    """A basis vector with nonzero coordinate sum, or None."""
    best = None
    for v in s.basis:
        total = sum(v)
        if s.exact:
            if total != 0:
                return v
        else:
            mag = abs(complex(total)) / max(1.0, max(abs(complex(x)) for x in v))
            if mag > tol and (best is None or mag > best[0]):
                best = (mag, v)
    return None if best is None else best[1]


def classify(modulus, threshold, tolerance=DEFAULT_TOLERANCE) -> str:
    """Compare |lambda_t| with lambda1^((d-1)/d) using a relative band."""
    if modulus is None:
        return UNIFORM
    mpmath.mp.dps = 50
    a = _as_mpf(modulus) if isinstance(modulus, Fraction) else mpmath.mpf(modulus)
    b = _as_mpf(threshold)
    if abs(a - b) <= tolerance * b:
        return CRITICAL
    return CONTINUUM if a > b else UNIFORM


def spectral_report(
    m, volumes, dimension: int, tolerance: float = DEFAULT_TOLERANCE, p_vec=None, q_vec=None
) -> SpectralReport:
    """Eigen-decomposition, the index t and the dichotomy class of a primitive substitution matrix."""
    ok, power = primitivity(m)
    if not ok:
        raise NotPrimitiveError("substitution matrix is not primitive")
    spaces = eigenspaces(m)
    exact = all(s.exact for s in spaces)
    top = spaces[0]
    if top.multiplicity != 1 or (len(spaces) > 1 and spaces[1].modulus >= top.modulus * (1 - 1e-12)):
        raise NotPrimitiveError("Perron-Frobenius eigenvalue is not strictly dominant")
    lambda1 = top.value if exact else complex(top.value).real
    u1 = tuple(Fraction(v) for v in volumes)
    mt_u = mat_vec(transpose(m), u1)
    if exact:
        if any(x != lambda1 * y for x, y in zip(mt_u, u1)):
            raise ValueError("volume vector is not a left Perron-Frobenius eigenvector")
    elif any(abs(float(x) - lambda1 * float(y)) > tolerance * lambda1 * float(max(u1)) for x, y in zip(mt_u, u1)):
        raise ValueError("volume vector is not a left Perron-Frobenius eigenvector")

    threshold = None
    if exact:
        root = dth_root(lambda1, dimension)
        if root is not None:
            threshold = root ** (dimension - 1)
    if threshold is None:
        mpmath.mp.dps = 50
        threshold = mpmath.power(_as_mpf(Fraction(lambda1)) if exact else mpmath.mpf(lambda1),
                                 mpmath.mpf(dimension - 1) / dimension)

    t_index = lambda_t = v_t = None
    position = 1
    for s in spaces:
        if position >= 2:
            v = _ones_nonzero(s, tolerance)
            if v is not None:
                if s.defective:
                    raise DefectiveEigenspaceError(
                        f"eigenvalue {s.value} at index {position} has algebraic multiplicity "
                        f"{s.multiplicity} but only {len(s.basis)} eigenvectors; t and its growth rate "
                        "are not determined by eigenvectors alone"
                    )
                t_index, lambda_t, v_t = position, s.value, v
                break
        position += s.multiplicity

    modulus_t = None
    if lambda_t is not None:
        modulus_t = abs(lambda_t) if isinstance(lambda_t, Fraction) else abs(complex(lambda_t))
    classification = classify(modulus_t, threshold, tolerance)

    critical = []
    if lambda_t is not None:
        critical = [
            s for s in spaces[1:]
            if abs(s.modulus - float(modulus_t)) <= tolerance * max(1.0, float(modulus_t))
        ]

    report = SpectralReport(
        matrix=tuple(tuple(r) for r in m),
        dimension=dimension,
        eigenspaces=spaces,
        u1=u1,
        lambda1=lambda1,
        threshold=threshold,
        t_index=t_index,
        lambda_t=lambda_t,
        v_t=v_t,
        classification=classification,
        exact=exact,
        primitive_power=power,
        critical_modulus=critical,
    )
    if p_vec is not None and q_vec is not None and lambda_t is not None:
        report.condition2 = theorem_condition(report, p_vec, q_vec, tolerance)
        report.c0_estimate = c0_estimate(m, p_vec, q_vec, modulus_t)
    return report


def theorem_condition(report: SpectralReport, p_vec, q_vec, tolerance=DEFAULT_TOLERANCE) -> list:
    """For each eigenvector of modulus |lambda_t| with nonzero coordinate sum: is p - q off its complement?"""
    diff = tuple(x - y for x, y in zip(p_vec, q_vec))
    out = []
    for s in report.critical_modulus:
        v = _ones_nonzero(s, tolerance)
        if v is None:
            continue
        if s.exact:
            ip = _dot(diff, v)
            holds = ip != 0
        else:
            ip = complex(sum(complex(a) * complex(b).conjugate() for a, b in zip(diff, v)))
            holds = abs(ip) > tolerance
        out.append({"eigenvalue": s.value, "inner_product": ip, "holds": holds})
    return out


def c0_estimate(m, p_vec, q_vec, modulus_t, k0: int = C0_START) -> float:
    """min over k in [k0, k0 + n] of |<1, M^k (p - q)>| / |lambda_t|^k; an estimate only."""
    n = len(m)
    seq = count_difference_sequence(m, p_vec, q_vec, k0 + n)
    mpmath.mp.dps = 50
    lam = _as_mpf(Fraction(modulus_t)) if isinstance(modulus_t, Fraction) else mpmath.mpf(modulus_t)
    return float(min(mpmath.mpf(seq[k]) / lam**k for k in range(k0, k0 + n + 1)))


def rule_report(r, p_vec=None, q_vec=None, tolerance=DEFAULT_TOLERANCE) -> SpectralReport:
    """Spectral report for a rule, checking lambda1 = xi^d."""
    m = substitution_matrix(r)
    volumes = [p.volume for p in r.prototiles]
    rep = spectral_report(m, volumes, r.dimension, tolerance, p_vec, q_vec)
    expected = r.inflation ** r.dimension
    if rep.exact:
        if rep.lambda1 != expected:
            raise ValueError(f"lambda1 = {rep.lambda1} differs from xi^d = {expected}")
    elif abs(rep.lambda1 - float(expected)) >= tolerance:
        raise ValueError(f"lambda1 = {rep.lambda1} differs from xi^d = {expected}")
    return rep
