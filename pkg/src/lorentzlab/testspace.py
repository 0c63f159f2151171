"""Two-layer test spaces ``S_{p,N,M,K,L}`` and the operators living on them."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from ._validation import INF, check_p, check_q, inv
from .lorentz import lorentz_norm, lorentz_norm_pairs
from .maximal import maximal_fn, maximal_fn_classes
from .mms import Fn, Space, SpaceError, distribution, distribution_from_pairs, unify, wrap
from .scalar import EXACT_BIT_LIMIT, Scalar, ctx, ssum, to_fraction

__all__ = [
    "SequenceSet", "TestSpaceParams", "ClassSpace", "ClassFn",
    "generate_sequences", "check_sequences", "build_explicit", "gamma",
    "op_A_ki", "op_A", "op_Mtilde", "witness_suite", "transfer_factor",
    "transfer_pairs", "corollary1_params", "model_norm", "class_norm",
    "DEFAULT_EXPLICIT_CAP",
]

DEFAULT_EXPLICIT_CAP = 10_000


# ---------------------------------------------------------------------------
# integers that may be astronomically large powers of two


def _int_scalar(v):
    """Scalar for a positive integer given as int, decimal string or ``"2^E"``."""
    if isinstance(v, Scalar):
        return v
    if isinstance(v, str) and v.startswith("2^"):
        return Scalar.pow2(int(v[2:]))
    return Scalar(int(v))


def _log2_exact(s: Scalar):
    """Exponent ``e`` when ``s == 2**e`` exactly, else ``None``."""
    if s.is_exact:
        fr = s.raw
        if fr.denominator == 1 and fr.numerator > 0 and fr.numerator & (fr.numerator - 1) == 0:
            return fr.numerator.bit_length() - 1
        return None
    man, exp = ctx.mpf(s.raw).man_exp
    if man == 1:
        return exp
    return None


def _int_json(s: Scalar):
    e = _log2_exact(s)
    if s.is_exact and s.raw.numerator.bit_length() <= 256:
        return str(s.raw.numerator)
    if e is not None:
        return f"2^{e}"
    raise ValueError("only integers or exact powers of two can be serialised")


def _ceil_frac(x: Fraction):
    return -((-x.numerator) // x.denominator)


# ---------------------------------------------------------------------------
# sequences (i)-(vi)


@dataclass(frozen=True)
class SequenceSet:
    """The four positive integer sequences attached to ``(p, N, M, L)``."""

    p: Fraction
    N: int
    M: int
    L: int
    m: tuple
    h: tuple
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        for name, n in (("m", self.N), ("h", self.N), ("alpha", self.M), ("beta", self.M)):
            seq = getattr(self, name)
            if len(seq) != n:
                raise ValueError(f"{name} must have length {n}")
            object.__setattr__(self, name, tuple(_int_scalar(v) for v in seq))

    def check(self):
        return check_sequences(self)

    def to_json(self):
        return {
            "p": str(self.p), "N": self.N, "M": self.M, "L": self.L,
            "m": [_int_json(v) for v in self.m], "h": [_int_json(v) for v in self.h],
            "alpha": [_int_json(v) for v in self.alpha], "beta": [_int_json(v) for v in self.beta],
        }


def _ratio_in_window(base: Scalar, top: Scalar, p: Fraction, extra: Scalar | None = None):
    """Decide ``1 <= base^(1-p) * top * extra < 2`` exactly where possible."""
    eb, et = _log2_exact(base), _log2_exact(top)
    ex = 0 if extra is None else _log2_exact(extra)
    if eb is not None and et is not None and ex is not None:
        expo = Fraction(et + ex) - Fraction(eb) * (p - 1)
        return 0 <= expo < 1
    # p = a/b:  base^(a-b) <= (top*extra)^b < 2^b base^(a-b)
    if all(s.is_exact for s in (base, top) + (() if extra is None else (extra,))):
        a, b = p.numerator, p.denominator
        prod = top.raw * (1 if extra is None else extra.raw)
        lhs = base.raw ** (a - b)
        mid = prod ** b
        return lhs <= mid < 2 ** b * lhs
    val = base ** (1 - p) * top * (1 if extra is None else extra)
    return Scalar(1) <= val < Scalar(2)


def check_sequences(seq: SequenceSet):
    """Report ``{'i': bool, ..., 'vi': bool}`` for the six sequence constraints."""
    p, N, M, L = seq.p, seq.N, seq.M, seq.L
    m, h, al, be = seq.m, seq.h, seq.alpha, seq.beta
    hN = h[-1]

    def divides(a: Scalar, b: Scalar):
        ea, eb = _log2_exact(a), _log2_exact(b)
        if ea is not None and eb is not None:
            return eb >= ea
        return b.is_exact and a.is_exact and b.raw.numerator % a.raw.numerator == 0

    rep = {
        "i": all(divides(h[i], hN) for i in range(N)),
        "ii": all(m[i + 1] >= Scalar(2) * m[i] * h[i] for i in range(N - 1)),
        "iii": all(_ratio_in_window(m[i], h[i], p) for i in range(N)),
        "iv": al[0] >= Scalar(2) * m[-1] * hN,
        "v": all(al[k + 1] >= Scalar(2) * al[k] * L * be[k] * hN for k in range(M - 1)),
        "vi": all(_ratio_in_window(al[k], be[k], p, hN) for k in range(M)),
    }
    return rep


def generate_sequences(p, N, M, L):
    """Greedy power-of-two realisation of constraints (i)-(vi).

    Every term is a power of two, so the exponents are tracked as exact
    integers even when the values themselves are far beyond any float.
    """
    p = check_p(p)
    for name, v in (("N", N), ("M", M), ("L", L)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer")
    N, M, L = int(N), int(M), int(L)
    f = [0]
    e = []
    for i in range(N):
        e.append(_ceil_frac(f[i] * (p - 1)))
        if i + 1 < N:
            f.append(1 + f[i] + e[i])
    fN, eN = f[-1], e[-1]
    lg_L = (L - 1).bit_length()
    A = [1 + fN + eN]
    B = []
    for k in range(M):
        while True:
            b = _ceil_frac(A[k] * (p - 1) - eN)
            if b >= 0:
                break
            A[k] += 1
        B.append(b)
        if k + 1 < M:
            A.append(1 + A[k] + lg_L + B[k] + eN)
    seq = SequenceSet(
        p=p, N=N, M=M, L=L,
        m=tuple(Scalar.pow2(x) for x in f), h=tuple(Scalar.pow2(x) for x in e),
        alpha=tuple(Scalar.pow2(x) for x in A), beta=tuple(Scalar.pow2(x) for x in B),
    )
    rep = check_sequences(seq)
    if not all(rep.values()):  # pragma: no cover - generator bug guard
        raise AssertionError(f"generated sequences violate {rep}")
    return seq


# ---------------------------------------------------------------------------
# parameters and the class-level space


@dataclass(frozen=True)
class TestSpaceParams:
    seq: SequenceSet
    K: Scalar = field(default_factory=lambda: Scalar(1))

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        K = self.K if isinstance(self.K, Scalar) else Scalar(to_fraction(self.K) if not isinstance(self.K, float) else self.K)
        if K < Scalar(1):
            raise ValueError("K must be at least 1")
        object.__setattr__(self, "K", K)

    @property
    def p(self):
        return self.seq.p

    def to_json(self):
        d = self.seq.to_json()
        d["K"] = self.K.to_json()
        return d

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj):
        seq = SequenceSet(p=to_fraction(obj["p"]), N=int(obj["N"]), M=int(obj["M"]), L=int(obj["L"]),
                          m=obj["m"], h=obj["h"], alpha=obj["alpha"], beta=obj["beta"])
        rep = check_sequences(seq)
        if not all(rep.values()):
            bad = [k for k, v in rep.items() if not v]
            raise ValueError(f"descriptor violates constraints {bad}")
        return cls(seq, Scalar.from_json(obj.get("K", "1")))

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))

    @classmethod
    def generate(cls, p, N, M, K=1, L=1):
        return cls(generate_sequences(p, N, M, L), K)


@dataclass(frozen=True)
class ClassFn:
    """Function constant on every ``S_i`` (``inner``) and ``S°_k`` (``outer``)."""

    inner: tuple
    outer: tuple

    def __init__(self, inner, outer):
        object.__setattr__(self, "inner", tuple(v if isinstance(v, Scalar) else Scalar(v) for v in inner))
        object.__setattr__(self, "outer", tuple(v if isinstance(v, Scalar) else Scalar(v) for v in outer))

    def values(self):
        return list(self.inner) + list(self.outer)

    def scale(self, c):
        return ClassFn([v * c for v in self.inner], [v * c for v in self.outer])


class ClassSpace:
    """Symmetry-reduced test space: one record per class ``S_i`` / ``S°_k``."""

    def __init__(self, params: TestSpaceParams):
        self.params = params
        seq = params.seq
        self.p, self.N, self.M, self.L = seq.p, seq.N, seq.M, seq.L
        self.K = params.K
        hN = seq.h[-1]
        self.inner_weight = seq.m
        self.inner_count = seq.h
        self.outer_weight = tuple(self.K * a for a in seq.alpha)
        self.outer_count = tuple(Scalar(self.L) * b * hN for b in seq.beta)
        self.fiber = tuple(tuple(c / seq.h[i] for c in self.outer_count) for i in range(self.N))
        self._raw = {}

    @classmethod
    def generate(cls, p, N, M, K=1, L=1):
        return cls(TestSpaceParams.generate(p, N, M, K, L))

    @cached_property
    def exact(self):
        """Whether every weight, count and fiber size is held exactly."""
        return all(s.is_exact for s in self.inner_weight + self.inner_count + self.outer_weight
                   + self.outer_count + tuple(x for row in self.fiber for x in row))

    def raw(self, name, exact):
        key = (name, exact)
        if key not in self._raw:
            val = getattr(self, name)
            if name == "fiber":
                flat = [x for row in val for x in row]
                raw, ex = unify(flat)
                if exact and not ex:
                    raise ValueError("class space is not exact")
                if not exact and ex:
                    raw = [ctx.mpf(x.numerator) / x.denominator for x in raw]
                self._raw[key] = [raw[i * self.M:(i + 1) * self.M] for i in range(self.N)]
            else:
                raw, ex = unify(val)
                if exact and not ex:
                    raise ValueError("class space is not exact")
                if not exact and ex:
                    raw = [ctx.mpf(x.numerator) / x.denominator for x in raw]
                self._raw[key] = raw
        return self._raw[key]

    @property
    def inner_mass(self):
        return tuple(h * m for h, m in zip(self.inner_count, self.inner_weight))

    @property
    def outer_mass(self):
        return tuple(c * w for c, w in zip(self.outer_count, self.outer_weight))

    @cached_property
    def n_points(self):
        return ssum(list(self.inner_count) + list(self.outer_count))

    def dominance_check(self):
        """The three strict dominance chains implied by (ii), (iv), (v)."""
        inner_total = ssum(self.inner_mass)
        ok_outer = all(w > inner_total for w in self.outer_weight)
        ok_inner = all(self.inner_weight[i] > ssum(self.inner_mass[:i]) for i in range(1, self.N))
        ok_chain = all(self.outer_weight[k] > ssum(self.outer_mass[:k]) for k in range(1, self.M))
        return {"outer_over_inner": ok_outer, "inner_chain": ok_inner, "outer_chain": ok_chain}

    def check_fiber_integrality(self):
        for row in self.fiber:
            for c in row:
                e = _log2_exact(c)
                if e is not None:
                    if e < 0:
                        return False
                elif not (c.is_exact and c.raw.denominator == 1):
                    return False
        return True

    # class functions
    def constant(self, c=1):
        return ClassFn([c] * self.N, [c] * self.M)

    def indicator(self, inner=(), outer=()):
        inner, outer = set(inner), set(outer)
        return ClassFn([1 if i in inner else 0 for i in range(self.N)],
                       [1 if k in outer else 0 for k in range(self.M)])

    def pairs(self, cf: ClassFn):
        return cf.values(), list(self.inner_mass) + list(self.outer_mass)

    # explicit tier
    def explicit_size(self):
        return self.n_points

    @cached_property
    def _explicit(self):
        return build_explicit(self.params, return_layout=True)

    def explicit(self, cap=DEFAULT_EXPLICIT_CAP):
        if self.n_points > Scalar(cap):
            raise SpaceError(f"test space has {self.n_points} points, above the explicit cap {cap};"
                             " use the class tier")
        return self._explicit[0]

    def layout(self):
        self.explicit()
        return self._explicit[1]

    def expand(self, cf: ClassFn):
        """Explicit Fn equal to ``cf`` on each class."""
        inner_idx, outer_idx = self.layout()
        vals = [None] * len(self.explicit())
        for i, idxs in enumerate(inner_idx):
            for j in idxs:
                vals[j] = cf.inner[i]
        for k, idxs in enumerate(outer_idx):
            for j in idxs:
                vals[j] = cf.outer[k]
        return Fn(vals)


def _as_int(s: Scalar, what):
    if not s.is_exact or s.raw.denominator != 1:
        raise SpaceError(f"{what} is not a moderate integer")
    return int(s.raw)


def build_explicit(params: TestSpaceParams, cap=DEFAULT_EXPLICIT_CAP, return_layout=False):
    """Every point of the test space, with the {0,1,2}-valued metric."""
    seq = params.seq
    N, M, L = seq.N, seq.M, seq.L
    total = ssum(list(seq.h) + [Scalar(L) * b * seq.h[-1] for b in seq.beta])
    if total > Scalar(cap):
        raise SpaceError(f"test space has {total} points, above the explicit cap {cap}; use the class tier")
    h = [_as_int(x, "h_i") for x in seq.h]
    hN = h[-1]
    outer = [L * _as_int(b, "beta_k") * hN for b in seq.beta]
    labels, weights = [], []
    inner_idx, outer_idx = [], []
    for i in range(N):
        inner_idx.append([])
        for j in range(h[i]):
            inner_idx[i].append(len(labels))
            labels.append(f"x_{i + 1},{j + 1}")
            weights.append(seq.m[i])
    for k in range(M):
        outer_idx.append([])
        w = params.K * seq.alpha[k]
        for l in range(outer[k]):
            outer_idx[k].append(len(labels))
            labels.append(f"xo_{k + 1},{l + 1}")
            weights.append(w)
    n = len(labels)
    dist = np.full((n, n), 2, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    for k in range(M):
        for l in range(1, outer[k] + 1):
            y = outer_idx[k][l - 1]
            for i in range(N):
                j = _gamma_raw(h[i], outer[k], l)
                x = inner_idx[i][j - 1]
                dist[x, y] = dist[y, x] = 1
    space = Space.build(labels, dist, weights, labels=labels, check=True)
    if return_layout:
        return space, (inner_idx, outer_idx)
    return space


def _gamma_raw(h_i, outer_count, l):
    # smallest j with l <= j * outer_count / h_i
    return -((-l * h_i) // outer_count)


def gamma(cs: ClassSpace, i, k, l):
    """Index ``j`` with ``Gamma_i(x°_{k,l}) = x_{i,j}`` (all indices 1-based)."""
    if not (1 <= i <= cs.N and 1 <= k <= cs.M):
        raise IndexError("class index out of range")
    h_i = _as_int(cs.inner_count[i - 1], "h_i")
    cnt = _as_int(cs.outer_count[k - 1], "L beta_k h_N")
    if not 1 <= l <= cnt:
        raise IndexError(f"l must lie in 1..{cnt}")
    return _gamma_raw(h_i, cnt, l)


# ---------------------------------------------------------------------------
# the operators A_{k,i}, A and M-tilde


def op_A_ki(cs: ClassSpace, k, i, f):
    """``A_{k,i} f`` (0-based ``k``, ``i``) for an explicit Fn or a ClassFn."""
    if not (0 <= i < cs.N and 0 <= k < cs.M):
        raise IndexError("class index out of range")
    factor = cs.inner_weight[i] / cs.outer_weight[k]
    if isinstance(f, ClassFn):
        outer = [Scalar(0)] * cs.M
        outer[k] = f.inner[i] * factor
        return ClassFn([0] * cs.N, outer)
    inner_idx, outer_idx = cs.layout()
    h_i = len(inner_idx[i])
    cnt = len(outer_idx[k])
    vals = [Scalar(0)] * len(f)
    for l, y in enumerate(outer_idx[k], start=1):
        x = inner_idx[i][_gamma_raw(h_i, cnt, l) - 1]
        vals[y] = f[x] * factor
    return Fn(vals)


def op_A(cs: ClassSpace, f):
    if isinstance(f, ClassFn):
        outer = []
        for k in range(cs.M):
            outer.append(ssum(f.inner[i] * (cs.inner_weight[i] / cs.outer_weight[k]) for i in range(cs.N)))
        return ClassFn([0] * cs.N, outer)
    acc = None
    for k in range(cs.M):
        for i in range(cs.N):
            g = op_A_ki(cs, k, i, f)
            acc = g if acc is None else acc + g
    return acc


def op_Mtilde(cs: ClassSpace, f):
    """``chi_{S minus S°} * max_{S°} f``."""
    if isinstance(f, ClassFn):
        top = max(f.outer, default=Scalar(0))
        return ClassFn([top] * cs.N, [0] * cs.M)
    inner_idx, outer_idx = cs.layout()
    top = max((f[j] for idxs in outer_idx for j in idxs), default=Scalar(0))
    vals = [Scalar(0)] * len(f)
    for idxs in inner_idx:
        for j in idxs:
            vals[j] = top
    return Fn(vals)


def transfer_factor(cs: ClassSpace, k, i, p=None):
    """Closed-form ``||A_{k,i} f||_{p,r} / ||f||_{p,r}`` for f supported in ``S_i``."""
    p = cs.p if p is None else Fraction(p)
    seq = cs.params.seq
    one_p = 1 / p
    return (cs.K ** (one_p - 1) * Scalar(cs.L) ** one_p * seq.m[i] ** (1 - one_p)
            * seq.h[i] ** (-one_p) * seq.alpha[k] ** (one_p - 1) * seq.beta[k] ** one_p
            * seq.h[-1] ** one_p)


def transfer_pairs(cs: ClassSpace, k, i, values):
    """Distribution data of ``f`` (given on the ``h_i`` points of ``S_i``) and of ``A_{k,i} f``.

    Returns ``((f_values, f_masses), (Af_values, Af_masses))``; each point of
    ``S_i`` has ``L beta_k h_N / h_i`` preimages in ``S°_k``.
    """
    values = [v if isinstance(v, Scalar) else Scalar(v) for v in values]
    m_i = cs.inner_weight[i]
    factor = m_i / cs.outer_weight[k]
    fib_mass = cs.fiber[i][k] * cs.outer_weight[k]
    f_pairs = (values, [m_i] * len(values))
    a_pairs = ([v * factor for v in values], [fib_mass] * len(values))
    return f_pairs, a_pairs


# ---------------------------------------------------------------------------
# norms and witnesses at class tier


def class_norm(cs: ClassSpace, cf: ClassFn, p, q):
    vals, masses = cs.pairs(cf)
    return lorentz_norm_pairs(vals, masses, p, q)


def class_ratio(cs: ClassSpace, cf: ClassFn, p, q, r):
    """``||M f||_{p,r} / ||f||_{p,q}`` for a class-constant ``f``."""
    den = class_norm(cs, cf, p, q)
    if not den:
        return Scalar(0)
    return class_norm(cs, maximal_fn_classes(cs, cf), p, r) / den


def _witnesses(cs: ClassSpace, p):
    p = Fraction(p)
    out = [("chi_S", cs.constant(1))]
    for i in range(cs.N):
        out.append((f"chi_S_{i + 1}", cs.indicator(inner=[i])))
    for k in range(cs.M):
        out.append((f"chi_So_{k + 1}", cs.indicator(outer=[k])))
    out.append(("lemma3", ClassFn([(cs.inner_count[i] * cs.inner_weight[i]) ** (-1 / p) for i in range(cs.N)],
                                  [0] * cs.M)))
    out.append(("chi_So", cs.indicator(outer=range(cs.M))))
    out.append(("chi_S_minus_So", cs.indicator(inner=range(cs.N))))
    for j in range(2, cs.N):
        out.append((f"chi_S_1..{j}", cs.indicator(inner=range(j))))
        out.append((f"chi_S_{j}..{cs.N}", cs.indicator(inner=range(j - 1, cs.N))))
    for j in range(2, cs.M):
        out.append((f"chi_So_1..{j}", cs.indicator(outer=range(j))))
        out.append((f"chi_So_{j}..{cs.M}", cs.indicator(outer=range(j - 1, cs.M))))
    return out


def witness_suite(cs: ClassSpace, p=None, q=2, r=2):
    """Ratios ``||M g||_{p,r} / ||g||_{p,q}`` for the named class-constant witnesses.

    Returns a list of ``(name, ratio, witness)``; the largest ratio is a
    certified lower bound for the operator norm.
    """
    p = cs.p if p is None else check_p(p)
    q = check_q(q)
    r = check_q(r, "r")
    return [(name, class_ratio(cs, g, p, q, r), g) for name, g in _witnesses(cs, p)]


# ---------------------------------------------------------------------------
# Corollary-1 parameterisation


def corollary1_params(p, lam, a, b, kappa, L_choice=None):
    """Test-space parameters with ``N = kappa^b``, ``M = kappa^a`` and
    ``K^(-1+1/p) L^(1/p) = lam * kappa^(-b)``."""
    p = check_p(p)
    lam = to_fraction(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    for name, v in (("a", a), ("b", b), ("kappa", kappa)):
        if int(v) != v or v < 0 or (name == "kappa" and v < 1):
            raise ValueError(f"{name} must be a nonnegative integer (kappa >= 1)")
    a, b, kappa = int(a), int(b), int(kappa)
    x = lam / Fraction(kappa) ** b
    xp = Scalar(x) ** p
    if L_choice is None:
        if xp <= Scalar(1):
            L = 1
        else:
            L = int(math.ceil(float(xp))) if float(xp) < 2 ** 52 else int(ctx.ceil(xp.as_mpf()))
            while Scalar(L - 1) >= xp and L > 1:
                L -= 1
            while Scalar(L) < xp:
                L += 1
    else:
        L = int(L_choice)
        if Scalar(L) < xp:
            raise ValueError("L_choice too small: K would drop below 1")
    K = Scalar(L) ** (1 / (p - 1)) * Scalar(x) ** (-p / (p - 1))
    if K < Scalar(1):
        # rounding guard: K is >= 1 mathematically here
        K = Scalar(1)
    return TestSpaceParams(generate_sequences(p, kappa ** b, kappa ** a, L), K)


def model_norm(p, q, r, lam, a, b, kappa):
    """Constant-free magnitude ``1 + lam * kappa^(a/r - b/q)``."""
    q = check_q(q)
    r = check_q(r, "r")
    expo = a * inv(r) - b * inv(q)
    return Scalar(1) + Scalar(to_fraction(lam)) * Scalar(kappa) ** expo
