"""Sparsifying operators and an empirical relative-concavity oracle.

Two operators are provided.  Hard thresholding (HT) keeps the ``s``
largest-magnitude entries of a vector and zeroes the rest.  Reciprocal
thresholding (RT) keeps the same support but shrinks each kept entry::

    RT(v)_i = sign(v_i) * (|v_i| + sqrt(v_i^2 - tau^2)) / 2

where ``tau`` is the magnitude of the (s+1)-th largest entry.  Kept
magnitudes therefore lie in ``[|v_i|/2, |v_i|]`` and shrink to exactly
half at a tied boundary.

Both operators break magnitude ties deterministically in favour of the
lowest index, so identical inputs always produce identical outputs.

``empirical_relative_concavity`` lower-bounds the worst-case ratio

    <y - Phi_s(z), z - Phi_s(z)> / ||y - Phi_s(z)||^2      (y s*-sparse)

by maximizing over randomized pairs, per-z analytically optimal sparse
responses, and deterministic tied-boundary configurations where the
supremum is attained.
"""

from dataclasses import dataclass

import numpy as np

from .rng import STREAM_CONCAVITY, substream

HT = "ht"
RT = "rt"
_KINDS = (HT, RT)


@dataclass(frozen=True)
class ThresholdSpec:
    """Which sparsifying operator to apply, and at which sparsity level."""

    kind: str
    s: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown thresholding kind {self.kind!r}; expected one of {_KINDS}")
        if self.s < 1:
            raise ValueError(f"sparsity level must be >= 1, got {self.s}")

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.kind == HT:
            return hard_threshold(v, self.s)
        return reciprocal_threshold(v, self.s)


def _check_input(v: np.ndarray, s: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("input must be a nonempty 1-d vector")
    if s < 1:
        raise ValueError(f"sparsity level must be >= 1, got {s}")
    return v


def top_s_support(v: np.ndarray, s: int) -> np.ndarray:
    """Indices of the ``min(s, len(v))`` largest-magnitude entries.

    Ties are broken by lowest index; the result is sorted ascending.
    """
    v = _check_input(v, s)
    s = min(s, v.size)
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:s])


def hard_threshold(v: np.ndarray, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries of ``v``, zero the rest."""
    v = _check_input(v, s)
    if s >= v.size:
        return v.copy()
    out = np.zeros_like(v)
    keep = top_s_support(v, s)
    out[keep] = v[keep]
    return out


def reciprocal_threshold(v: np.ndarray, s: int) -> np.ndarray:
    """Keep the top-``s`` support of ``v`` with reciprocal shrinkage.

    When ``s >= len(v)`` the boundary magnitude is 0 and the operator is
    the identity.
    """
    v = _check_input(v, s)
    if s >= v.size:
        return v.copy()
    order = np.argsort(-np.abs(v), kind="stable")
    keep = order[:s]
    tau = abs(v[order[s]])
    a = np.abs(v[keep])
    under = a * a - tau * tau
    # tau is the (s+1)-th magnitude, so kept entries satisfy |v_i| >= tau
    assert np.all(under >= 0.0), "reciprocal threshold: kept magnitude below boundary"
    out = np.zeros_like(v)
    out[keep] = np.sign(v[keep]) * 0.5 * (a + np.sqrt(under))
    return out


def threshold_batch(Z: np.ndarray, s: int, kind: str) -> np.ndarray:
    """Row-wise operator application; matches the 1-d functions exactly."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] == 0:
        raise ValueError("input must be a nonempty 2-d batch of row vectors")
    if s < 1:
        raise ValueError(f"sparsity level must be >= 1, got {s}")
    if kind not in _KINDS:
        raise ValueError(f"unknown thresholding kind {kind!r}")
    nrows, dim = Z.shape
    if s >= dim:
        return Z.copy()
    order = np.argsort(-np.abs(Z), axis=1, kind="stable")
    keep = order[:, :s]
    rows = np.arange(nrows)[:, None]
    kept = np.take_along_axis(Z, keep, axis=1)
    out = np.zeros_like(Z)
    if kind == HT:
        out[rows, keep] = kept
        return out
    tau = np.abs(np.take_along_axis(Z, order[:, s : s + 1], axis=1))
    a = np.abs(kept)
    under = a * a - tau * tau
    assert np.all(under >= 0.0), "reciprocal threshold: kept magnitude below boundary"
    out[rows, keep] = np.sign(kept) * 0.5 * (a + np.sqrt(under))
    return out


def relative_concavity_bound(kind: str, s_star: int, s: int) -> float | None:
    """Worst-case concavity ratio guaranteed for the operator.

    HT: sqrt(s*/s) / 2 for all s* <= s.
    RT: (s*/s) / min{1, 4 (1 - s*/s)}, defined only for s* < s.
    """
    if not 1 <= s_star <= s:
        raise ValueError(f"need 1 <= s_star <= s, got s_star={s_star}, s={s}")
    r = s_star / s
    if kind == HT:
        return 0.5 * np.sqrt(r)
    if kind == RT:
        if s_star == s:
            return None
        return r / min(1.0, 4.0 * (1.0 - r))
    raise ValueError(f"unknown thresholding kind {kind!r}")


@dataclass(frozen=True)
class ConcavityEstimate:
    """Empirical lower bound on the concavity ratio of one operator cell."""

    operator: ThresholdSpec
    s_star: int
    dim: int
    estimate: float
    theoretical_bound: float | None
    trials: int

    def __post_init__(self):
        if self.estimate < 0:
            raise ValueError("concavity estimate must be nonnegative")
        if not self.s_star <= self.operator.s <= self.dim:
            raise ValueError("need s_star <= s <= dim")


def _pair_ratios(Y: np.ndarray, Z: np.ndarray, s: int, kind: str) -> np.ndarray:
    """Concavity ratios for row-paired (y, z); pairs with y = Phi(z) are dropped."""
    P = threshold_batch(Z, s, kind)
    R = Z - P
    W = Y - P
    num = np.einsum("ij,ij->i", W, R)
    den = np.einsum("ij,ij->i", W, W)
    ok = den > 0.0
    return num[ok] / den[ok]


def _best_response(Z: np.ndarray, s: int, kind: str, s_star: int) -> np.ndarray:
    """Per-row s*-sparse y maximizing the ratio over supports off the kept set.

    For y supported on T disjoint from the kept support, the ratio is
    (c A - q) / (c^2 A + B) with A = ||r_T||^2, B = ||Phi(z)||^2,
    q = <Phi(z), z - Phi(z)> and y = c r_T; the best T is the top-s* of the
    off-support residual and the optimal scale is c = (q + sqrt(q^2+AB))/A.
    """
    P = threshold_batch(Z, s, kind)
    R = Z - P
    Rm = np.where(P != 0.0, 0.0, R)
    nrows, dim = Z.shape
    k = min(s_star, dim)
    idx = np.argpartition(-np.abs(Rm), kth=k - 1, axis=1)[:, :k]
    rows = np.arange(nrows)[:, None]
    rT = np.zeros_like(Z)
    rT[rows, idx] = Rm[rows, idx]
    A = np.einsum("ij,ij->i", rT, rT)
    B = np.einsum("ij,ij->i", P, P)
    q = np.einsum("ij,ij->i", P, R)
    c = np.zeros(nrows)
    good = A > 0.0
    c[good] = (q[good] + np.sqrt(q[good] ** 2 + A[good] * B[good])) / A[good]
    return c[:, None] * rT


def _structured_pairs(s: int, s_star: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tied-boundary configurations where the supremum is approached.

    z has s unit entries followed by a block of s* entries at magnitude
    1 - delta; y lives on that block.  The scale grid brackets
    sqrt(s/s*), the maximizer at an exact tie.
    """
    k = min(s_star, dim - s)
    if k <= 0:
        return np.empty((0, dim)), np.empty((0, dim))
    b_star = np.sqrt(s / s_star)
    zs, ys = [], []
    for delta in (0.0, 1e-9, 1e-6, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.4, 0.8):
        z = np.zeros(dim)
        z[:s] = 1.0
        z[s : s + k] = 1.0 - delta
        for g in (0.25, 0.5, 1.0, 2.0, 4.0):
            y = np.zeros(dim)
            y[s : s + k] = g * b_star * (1.0 - delta)
            zs.append(z)
            ys.append(y)
    return np.array(ys), np.array(zs)


def empirical_relative_concavity(
    op: ThresholdSpec,
    s_star: int,
    dim: int,
    trials: int,
    seed: int,
    batch_size: int = 20000,
) -> ConcavityEstimate:
    """Maximize the concavity ratio over randomized and structured pairs.

    ``trials`` counts random z draws; each contributes a random s*-sparse y
    and the analytically optimal off-support response, so the number of
    evaluated pairs is at least ``2 * trials``.  The estimate is a lower
    bound on the true supremum (tight at tied boundaries for HT).
    """
    s = op.s
    if s_star < 1 or s_star > s:
        raise ValueError(f"need 1 <= s_star <= s, got s_star={s_star}, s={s}")
    if s > dim:
        raise ValueError(f"operator sparsity {s} exceeds dimension {dim}")
    if trials < 1:
        raise ValueError("trials must be >= 1")

    rng = substream(seed, STREAM_CONCAVITY)
    best = 0.0
    total = 0
    done = 0
    while done < trials:
        b = min(batch_size, trials - done)
        Z = rng.standard_normal((b, dim))
        keys = rng.random((b, dim))
        idx = np.argpartition(keys, kth=min(s_star, dim) - 1, axis=1)[:, : min(s_star, dim)]
        rows = np.arange(b)[:, None]
        Y = np.zeros((b, dim))
        scale = 10.0 ** rng.uniform(-1.0, 1.5, size=(b, 1))
        Y[rows, idx] = rng.standard_normal((b, min(s_star, dim))) * scale
        for cand in (Y, _best_response(Z, s, op.kind, s_star)):
            r = _pair_ratios(cand, Z, s, op.kind)
            if r.size:
                best = max(best, float(r.max()))
            total += r.size
        done += b

    Ys, Zs = _structured_pairs(s, s_star, dim)
    if Zs.size:
        for cand in (Ys, _best_response(Zs, s, op.kind, s_star)):
            r = _pair_ratios(cand, Zs, s, op.kind)
            if r.size:
                best = max(best, float(r.max()))
            total += r.size

    return ConcavityEstimate(
        operator=op,
        s_star=s_star,
        dim=dim,
        estimate=best,
        theoretical_bound=relative_concavity_bound(op.kind, s_star, s),
        trials=total,
    )
