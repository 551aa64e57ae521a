"""
Hessian operators G(A) = Ghat(Lambda(A)) with their admissible cones.

Covers the least eigenvalue, single eigenvalues, nonnegative eigenvalue
combinations, complex Monge-Ampere, k-Hessian, k-Monge-Ampere and the
two-dimensional s-interpolated operator, together with the comparability
machinery G(A+P) - G(A) >= C * Lambda_1(P).
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from django.db import models

from .exceptions import ContractError, OutsideConeError
from .hermitian import (
    HermitianMatrix, Xorshift64Star, eig_hermitian, q11_part,
    random_hermitian, random_positive,
)

logger = logging.getLogger(__name__)

CONE_TOL = 1e-12
MAX_CONE_DRAWS = 100_000
SAMPLE_CHUNK = 256
HOMOGENEITY_FACTORS = (0.5, 2.0, 7.0)
CONCAVITY_WEIGHTS = (0.25, 0.5, 0.75)


class OperatorKind(models.TextChoices):
    LAMBDA1 = 'lambda1', 'Least eigenvalue'
    LAMBDA_K = 'lambda_k', 'k-th eigenvalue'
    EIGEN_COMBINATION = 'eigen_combination', 'Eigenvalue combination'
    MONGE_AMPERE = 'monge_ampere', 'Complex Monge-Ampere'
    K_HESSIAN = 'k_hessian', 'Complex k-Hessian'
    K_MONGE_AMPERE = 'k_monge_ampere', 'Complex k-Monge-Ampere'
    INTERPOLATED_S = 'interpolated_s', 'Interpolated (n = 2)'


ROOT_KINDS = {
    OperatorKind.MONGE_AMPERE, OperatorKind.K_HESSIAN,
    OperatorKind.K_MONGE_AMPERE, OperatorKind.INTERPOLATED_S,
}


@dataclass(frozen=True)
class OperatorSpec:
    """Tagged operator description; ``k``, ``a`` and ``s`` are used per kind."""

    kind: str
    n: int
    k: int = None
    a: tuple = None
    s: float = None

    def __post_init__(self):
        try:
            kind = OperatorKind(self.kind)
        except ValueError:
            raise ContractError(f"unknown operator kind '{self.kind}'")
        object.__setattr__(self, 'kind', kind)
        if not 1 <= self.n <= 4:
            raise ContractError(f'dimension {self.n} outside 1..4')

        if kind in (OperatorKind.LAMBDA_K, OperatorKind.K_HESSIAN, OperatorKind.K_MONGE_AMPERE):
            if self.k is None or not 1 <= self.k <= self.n:
                raise ContractError(f'{kind.value} needs 1 <= k <= n, got k={self.k}')
        if kind == OperatorKind.EIGEN_COMBINATION:
            if self.a is None or len(self.a) != self.n:
                raise ContractError(f'eigen_combination needs {self.n} coefficients')
            coefficients = tuple(float(x) for x in self.a)
            if min(coefficients) < 0 or sum(coefficients) <= 0:
                raise ContractError('eigen_combination needs a_k >= 0 and sum a_k > 0')
            object.__setattr__(self, 'a', coefficients)
        if kind == OperatorKind.INTERPOLATED_S:
            if self.n != 2:
                raise ContractError('interpolated_s is defined for n = 2 only')
            if self.s is None or not 0.0 <= self.s <= 1.0:
                raise ContractError(f'interpolated_s needs s in [0, 1], got {self.s}')
            object.__setattr__(self, 's', float(self.s))

    @classmethod
    def from_token(cls, token, n):
        """Parse 'kind' or 'kind:param' (a as ';'-separated list), e.g. 'k_hessian:2'."""
        name, _, param = token.strip().partition(':')
        name = name.strip()
        param = param.strip()
        if name in (OperatorKind.LAMBDA_K, OperatorKind.K_HESSIAN, OperatorKind.K_MONGE_AMPERE):
            if not param:
                raise ContractError(f'{name} needs a k parameter')
            return cls(name, n, k=int(param))
        if name == OperatorKind.EIGEN_COMBINATION:
            return cls(name, n, a=tuple(float(x) for x in param.split(';') if x.strip()))
        if name == OperatorKind.INTERPOLATED_S:
            return cls(name, n, s=float(param) if param else None)
        return cls(name, n)

    @property
    def label(self):
        if self.kind in (OperatorKind.LAMBDA_K, OperatorKind.K_HESSIAN, OperatorKind.K_MONGE_AMPERE):
            return f'{self.kind.value}:{self.k}'
        if self.kind == OperatorKind.EIGEN_COMBINATION:
            return f"{self.kind.value}:{';'.join(f'{x:g}' for x in self.a)}"
        if self.kind == OperatorKind.INTERPOLATED_S:
            return f'{self.kind.value}:{self.s:g}'
        return self.kind.value


# =========================
# Cones and Ghat on spectra
# =========================

def _sigma(lam, k):
    """Elementary symmetric polynomial sigma_k along the last axis."""
    n = lam.shape[-1]
    total = np.zeros(lam.shape[:-1])
    for idx in combinations(range(n), k):
        total = total + np.prod(lam[..., list(idx)], axis=-1)
    return total


def _partial_sums(lam, k):
    n = lam.shape[-1]
    return np.stack([lam[..., list(idx)].sum(axis=-1) for idx in combinations(range(n), k)], axis=-1)


def cone_margins(spec, lam):
    """Defining quantities of the cone; membership means every margin > 0."""
    lam = np.asarray(lam, dtype=float)
    kind = spec.kind
    if kind in (OperatorKind.LAMBDA1, OperatorKind.MONGE_AMPERE):
        return lam
    if kind == OperatorKind.LAMBDA_K:
        return lam[..., spec.k - 1:spec.k]
    if kind == OperatorKind.EIGEN_COMBINATION:
        return (lam @ np.asarray(spec.a))[..., None]
    if kind == OperatorKind.K_HESSIAN:
        return np.stack([_sigma(lam, l) for l in range(1, spec.k + 1)], axis=-1)
    if kind == OperatorKind.K_MONGE_AMPERE:
        return _partial_sums(lam, spec.k)
    s = spec.s
    return np.stack([lam[..., 0] + s * lam[..., 1], s * lam[..., 0] + lam[..., 1]], axis=-1)


def in_cone_values(spec, lam, closed=False):
    margins = cone_margins(spec, lam)
    if closed:
        return np.all(margins >= -CONE_TOL, axis=-1)
    return np.all(margins > CONE_TOL, axis=-1)


def ghat(spec, lam):
    """Ghat on eigenvalue vectors (last axis); roots are taken on the clipped closure."""
    lam = np.asarray(lam, dtype=float)
    kind = spec.kind
    n = lam.shape[-1]
    if kind == OperatorKind.LAMBDA1:
        return lam[..., 0]
    if kind == OperatorKind.LAMBDA_K:
        return lam[..., spec.k - 1]
    if kind == OperatorKind.EIGEN_COMBINATION:
        return lam @ np.asarray(spec.a)
    if kind == OperatorKind.MONGE_AMPERE:
        return np.prod(np.maximum(lam, 0.0), axis=-1) ** (1.0 / n)
    if kind == OperatorKind.K_HESSIAN:
        return np.maximum(_sigma(lam, spec.k), 0.0) ** (1.0 / spec.k)
    if kind == OperatorKind.K_MONGE_AMPERE:
        sums = np.maximum(_partial_sums(lam, spec.k), 0.0)
        return np.prod(sums, axis=-1) ** (1.0 / math.comb(n, spec.k))
    s = spec.s
    l1, l2 = lam[..., 0], lam[..., 1]
    return np.sqrt(np.maximum((1 - s) ** 2 * l1 * l2 + s * (l1 + l2) ** 2, 0.0))


def ghat_extended(spec, lam):
    """Ghat where defined, NaN outside the closed cone for root kinds."""
    values = ghat(spec, lam)
    if spec.kind in ROOT_KINDS:
        values = np.where(in_cone_values(spec, lam, closed=True), values, np.nan)
    return values


def _check_dimension(spec, H):
    if H.n != spec.n:
        raise ContractError(f'matrix dimension {H.n} does not match operator dimension {spec.n}')


def in_cone(spec, H, closed=False):
    """True iff Lambda(H) lies in the operator's (open, or closed) cone."""
    _check_dimension(spec, H)
    return bool(in_cone_values(spec, eig_hermitian(H).values, closed=closed))


def evaluate(spec, H):
    """G(H) = Ghat(Lambda(H)) on the closed cone."""
    _check_dimension(spec, H)
    lam = eig_hermitian(H).values
    if not in_cone_values(spec, lam, closed=True):
        shortfall = float(-cone_margins(spec, lam).min())
        raise OutsideConeError(
            f'{spec.label} undefined at spectrum {np.round(lam, 12).tolist()}', shortfall=shortfall
        )
    return float(ghat(spec, lam))


def hamiltonian(spec, Q, f_value):
    """G(Q^{1,1}) - f when Q^{1,1} is in the closed cone, otherwise -inf."""
    H = q11_part(Q)
    try:
        return evaluate(spec, H) - f_value
    except OutsideConeError:
        return -math.inf


def cone_shift_values(spec, lam):
    """Minimal mu >= 0 such that lam + mu lies in the closed cone."""
    lam = np.asarray(lam, dtype=float)
    kind = spec.kind
    if kind in (OperatorKind.LAMBDA1, OperatorKind.MONGE_AMPERE):
        mu = -lam[0]
    elif kind == OperatorKind.LAMBDA_K:
        mu = -lam[spec.k - 1]
    elif kind == OperatorKind.EIGEN_COMBINATION:
        a = np.asarray(spec.a)
        mu = -float(lam @ a) / a.sum()
    elif kind == OperatorKind.K_MONGE_AMPERE:
        mu = -lam[:spec.k].sum() / spec.k
    elif kind == OperatorKind.INTERPOLATED_S:
        s = spec.s
        mu = max(-(lam[0] + s * lam[1]), -(s * lam[0] + lam[1])) / (1 + s)
    else:
        # k-Hessian: membership of lam + mu is monotone in mu and holds at mu = -lam_1
        if in_cone_values(spec, lam, closed=True):
            return 0.0
        lo, hi = 0.0, max(-lam[0], 0.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if in_cone_values(spec, lam + mid, closed=True):
                hi = mid
            else:
                lo = mid
        mu = hi
    return max(float(mu), 0.0)


def cone_shift(spec, H):
    _check_dimension(spec, H)
    return cone_shift_values(spec, eig_hermitian(H).values)


# =============
# Comparability
# =============

def known_constant(spec):
    """Analytic C in G(A+P) - G(A) >= C * Lambda_1(P), or None when not derived."""
    kind = spec.kind
    if kind in (OperatorKind.LAMBDA1, OperatorKind.LAMBDA_K, OperatorKind.MONGE_AMPERE):
        return 1.0
    if kind == OperatorKind.EIGEN_COMBINATION:
        return float(sum(spec.a))
    if kind == OperatorKind.K_HESSIAN:
        return float(math.comb(spec.n, spec.k) ** (1.0 / spec.k))
    if kind == OperatorKind.K_MONGE_AMPERE:
        return float(spec.k)
    return None


@dataclass(frozen=True)
class ComparabilityReport:
    spec: OperatorSpec
    samples: int
    empirical_C: float
    worst_pair: tuple
    analytic_C: float = None
    ratios: tuple = field(default=(), repr=False)
    self_ratio_min: float = None
    monge_ampere_ratio_min: float = None
    draws: int = 0

    @property
    def consistent(self):
        if self.analytic_C is None:
            return True
        return self.empirical_C >= self.analytic_C - 1e-9


def sample_in_cone(spec, rng, positive_cone=False):
    """Random matrix in the open cone; returns (matrix, draws used)."""
    if positive_cone:
        return random_positive(spec.n, rng), 1
    for draw in range(1, MAX_CONE_DRAWS + 1):
        A = random_hermitian(spec.n, rng)
        if in_cone(spec, A):
            return A, draw
    raise ContractError(f'no sample of {spec.label} cone found in {MAX_CONE_DRAWS} draws')


def comparability_estimate(spec, sample_count, seed, positive_cone=False):
    """Empirical comparability constant over seeded (A in cone, P > 0) pairs."""
    if sample_count < 1:
        raise ContractError('sample_count must be at least 1')
    root = Xorshift64Star(seed)
    ratios = []
    worst = None
    self_min = math.inf
    ma_min = math.inf
    draws = 0

    for chunk_start in range(0, sample_count, SAMPLE_CHUNK):
        rng = root.derive(chunk_start // SAMPLE_CHUNK)
        for _ in range(min(SAMPLE_CHUNK, sample_count - chunk_start)):
            A, used = sample_in_cone(spec, rng, positive_cone=positive_cone)
            draws += used
            P = random_positive(spec.n, rng)
            lam_p = eig_hermitian(P).values
            g_p = evaluate(spec, P)
            ratio = (evaluate(spec, A + P) - evaluate(spec, A)) / lam_p[0]
            ratios.append(ratio)
            if worst is None or ratio < worst[0]:
                worst = (ratio, A, P)
            self_min = min(self_min, g_p / lam_p[0])
            ma_min = min(ma_min, g_p / float(np.prod(lam_p)) ** (1.0 / spec.n))

    report = ComparabilityReport(
        spec=spec,
        samples=sample_count,
        empirical_C=float(worst[0]),
        worst_pair=(worst[1], worst[2]),
        analytic_C=known_constant(spec),
        ratios=tuple(ratios),
        self_ratio_min=float(self_min),
        monge_ampere_ratio_min=float(ma_min),
        draws=draws,
    )
    logger.info(
        'Comparability %s: empirical C %.6g over %d samples (%d draws), analytic %s',
        spec.label, report.empirical_C, sample_count, draws, report.analytic_C,
    )
    return report


# =================
# Property battery
# =================

def _first_ascent(a):
    for j in range(len(a) - 1):
        if a[j] < a[j + 1] - 1e-12:
            return j
    return None


def concavity_witness(spec):
    """(A, B, alpha) violating concavity, or None when the operator is concave.

    Lambda_k for k >= 2 and eigen_combination with some a_j < a_{j+1} are not
    concave. For the combination, A and B share a spectrum and differ by a swap
    of two adjacent eigenvalues; their midpoint merges them.
    """
    n = spec.n
    if spec.kind == OperatorKind.LAMBDA_K and spec.k >= 2:
        m = n - spec.k + 1
        a = np.zeros(n)
        b = np.zeros(n)
        a[:m] = 1.0
        b[n - m:] = 1.0
        return HermitianMatrix.diag(*a), HermitianMatrix.diag(*b), 0.5
    if spec.kind == OperatorKind.EIGEN_COMBINATION:
        j = _first_ascent(spec.a)
        if j is None:
            return None
        base = 1.0 + 10.0 * np.arange(n)
        a = base.copy()
        b = base.copy()
        a[j], a[j + 1] = base[j], base[j] + 1.0
        b[j], b[j + 1] = base[j] + 1.0, base[j]
        return HermitianMatrix.diag(*a), HermitianMatrix.diag(*b), 0.5
    return None


def witness_holds(spec, witness):
    A, B, alpha = witness
    mixed = evaluate(spec, alpha * A + (1 - alpha) * B)
    return mixed < alpha * evaluate(spec, A) + (1 - alpha) * evaluate(spec, B) - 1e-9


@dataclass
class PropertyBattery:
    spec: OperatorSpec
    trials: int
    homogeneity_pass: int = 0
    ellipticity_pass: int = 0
    concavity_pass: int = 0
    concavity_checks: int = 0
    concavity_skipped: int = 0
    comparability_pass: int = 0
    concavity_witness: str = ''


def property_battery(spec, trials, seed, positive_cone=False):
    """Pass counts for 1-homogeneity, ellipticity, concavity and G(P) >= C Lambda_1(P)."""
    rng = Xorshift64Star(seed)
    battery = PropertyBattery(spec=spec, trials=trials)
    witness = concavity_witness(spec)
    analytic = known_constant(spec)

    for _ in range(trials):
        A, _ = sample_in_cone(spec, rng, positive_cone=positive_cone)
        B, _ = sample_in_cone(spec, rng, positive_cone=positive_cone)
        P = random_positive(spec.n, rng)
        g_a = evaluate(spec, A)

        if all(
            abs(evaluate(spec, alpha * A) - alpha * g_a) <= 1e-10 * max(1.0, abs(alpha * g_a))
            for alpha in HOMOGENEITY_FACTORS
        ):
            battery.homogeneity_pass += 1

        if evaluate(spec, A + P) >= g_a - 1e-9:
            battery.ellipticity_pass += 1

        if witness is None:
            g_b = evaluate(spec, B)
            for alpha in CONCAVITY_WEIGHTS:
                mixed = alpha * A + (1 - alpha) * B
                if not in_cone(spec, mixed, closed=True):
                    battery.concavity_skipped += 1
                    continue
                battery.concavity_checks += 1
                if evaluate(spec, mixed) >= alpha * g_a + (1 - alpha) * g_b - 1e-9:
                    battery.concavity_pass += 1

        if analytic is None or evaluate(spec, P) >= analytic * eig_hermitian(P).values[0] - 1e-9:
            battery.comparability_pass += 1

    if witness is not None:
        verdict = 'reproduced' if witness_holds(spec, witness) else 'NOT reproduced'
        A, B, alpha = witness
        battery.concavity_witness = (
            f'counterexample {verdict}: A=diag{tuple(np.real(np.diag(A.entries)))}, '
            f'B=diag{tuple(np.real(np.diag(B.entries)))}, alpha={alpha}'
        )
    return battery
