"""
Hermitian linear algebra for complex Hessians.

Spectra come from a cyclic Jacobi eigensolver (deterministic, exact enough
for n <= 4); grid-scale work uses ``batch_spectra`` on stacked arrays.
Coordinates of the real form are ordered (x1, y1, x2, y2, ...).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError, EngineError

logger = logging.getLogger(__name__)

MAX_DIMENSION = 4
HERMITIAN_TOL = 1e-14
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 50
INEQUALITY_SLACK = 1e-9


# =======================
# Seeded random generator
# =======================

_MASK64 = (1 << 64) - 1
_XORSHIFT_MULTIPLIER = 0x2545F4914F6CDD1D
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(value):
    """One splitmix64 step; used to turn small seeds into well-mixed states."""
    z = (value + _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Xorshift64Star:
    """
    xorshift64* generator: shifts (12, 25, 27), multiplier 0x2545F4914F6CDD1D.

    The state is seeded through splitmix64 so that seed 0 is valid. Uniform
    doubles take the top 53 bits of each output.
    """

    def __init__(self, seed=0):
        self.seed = int(seed)
        self._state = _splitmix64(self.seed & _MASK64) or _SPLITMIX_GAMMA

    def derive(self, worker):
        """Independent generator for a worker index, stable for (seed, worker)."""
        return Xorshift64Star(_splitmix64((self.seed ^ (int(worker) * _SPLITMIX_GAMMA)) & _MASK64))

    def next_u64(self):
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _XORSHIFT_MULTIPLIER) & _MASK64

    def random(self):
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low=-1.0, high=1.0, size=None):
        if size is None:
            return low + (high - low) * self.random()
        count = int(np.prod(size))
        values = np.array([self.random() for _ in range(count)], dtype=float)
        return (low + (high - low) * values).reshape(size)


# ============
# Domain types
# ============

@dataclass(frozen=True)
class HermitianMatrix:
    """n x n Hermitian matrix (1 <= n <= 4), immutable after construction."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ContractError(f'Hermitian matrix must be square, got shape {arr.shape}')
        n = arr.shape[0]
        if not 1 <= n <= MAX_DIMENSION:
            raise ContractError(f'dimension {n} outside 1..{MAX_DIMENSION}')
        defect = np.abs(arr - arr.conj().T).max()
        if defect > HERMITIAN_TOL:
            j, k = np.unravel_index(np.argmax(np.abs(arr - arr.conj().T)), arr.shape)
            raise ContractError(
                f'matrix is not Hermitian: |H[{j}][{k}] - conj(H[{k}][{j}])| = {defect:.3e}'
            )
        arr.setflags(write=False)
        object.__setattr__(self, 'entries', arr)

    @property
    def n(self):
        return self.entries.shape[0]

    @classmethod
    def from_array(cls, arr, symmetrize=False):
        arr = np.asarray(arr, dtype=complex)
        if symmetrize:
            arr = 0.5 * (arr + arr.conj().T)
        return cls(arr)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n, dtype=complex))

    @classmethod
    def diag(cls, *values):
        return cls(np.diag(np.asarray(values, dtype=complex)))

    def __add__(self, other):
        return HermitianMatrix(self.entries + other.entries)

    def __sub__(self, other):
        return HermitianMatrix(self.entries - other.entries)

    def __neg__(self):
        return HermitianMatrix(-self.entries)

    def __mul__(self, alpha):
        return HermitianMatrix(float(alpha) * self.entries)

    __rmul__ = __mul__

    def shifted(self, mu):
        """H + mu * I."""
        return HermitianMatrix(self.entries + mu * np.eye(self.n))

    def frobenius(self):
        return float(np.linalg.norm(self.entries))

    def __eq__(self, other):
        return isinstance(other, HermitianMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in ascending order, optionally with orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SymmetricForm:
    """Real symmetric 2n x 2n form, symmetrized on construction."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ContractError(f'symmetric form must be square, got shape {arr.shape}')
        arr = 0.5 * (arr + arr.T)
        arr.setflags(write=False)
        object.__setattr__(self, 'entries', arr)

    @property
    def m(self):
        return self.entries.shape[0]

    def __add__(self, other):
        return SymmetricForm(self.entries + other.entries)

    def __mul__(self, alpha):
        return SymmetricForm(float(alpha) * self.entries)

    __rmul__ = __mul__


# ==========
# Operations
# ==========

def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eig_hermitian(H, want_vectors=False):
    """Cyclic Jacobi diagonalization (row-cyclic order, at most 50 sweeps)."""
    a = np.array(H.entries, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = JACOBI_TOL * np.linalg.norm(a)

    sweeps = 0
    while _off_norm(a) > threshold:
        if sweeps == JACOBI_MAX_SWEEPS:
            raise EngineError(
                f'Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps '
                f'(off-diagonal norm {_off_norm(a):.3e})'
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ rot
                a[cols, :] = rot.conj().T @ a[cols, :]
                v[:, cols] = v[:, cols] @ rot
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

    values = np.real(np.diag(a))
    order = np.argsort(values, kind='stable')
    values = values[order]
    if want_vectors:
        return Spectrum(values=values, vectors=v[:, order])
    return Spectrum(values=values)


def lambda_k(H, k):
    """k-th smallest eigenvalue, 1-based."""
    if not 1 <= k <= H.n:
        raise ContractError(f'eigenvalue index {k} outside 1..{H.n}')
    return float(eig_hermitian(H).values[k - 1])


def rayleigh(H, v):
    """<v, Hv> / <v, v> for a nonzero complex vector."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (H.n,):
        raise ContractError(f'vector of length {v.shape} for dimension {H.n}')
    norm2 = float(np.vdot(v, v).real)
    if norm2 == 0.0:
        raise ContractError('Rayleigh quotient of the zero vector')
    return float(np.vdot(v, H.entries @ v).real / norm2)


def q11_part(Q):
    """Hermitian (1,1)-part of a real form on C^n = R^2n."""
    if Q.m % 2:
        raise ContractError(f'form dimension {Q.m} is odd')
    q = Q.entries
    x = q[0::2, 0::2]
    y = q[1::2, 1::2]
    xy = q[0::2, 1::2]
    yx = q[1::2, 0::2]
    return HermitianMatrix(0.25 * ((x + y) + 1j * (xy - yx)))


def q11_batch(forms):
    """(1,1)-parts of a stack of real forms, shape (N, 2n, 2n) -> (N, n, n)."""
    x = forms[:, 0::2, 0::2]
    y = forms[:, 1::2, 1::2]
    xy = forms[:, 0::2, 1::2]
    yx = forms[:, 1::2, 0::2]
    return 0.25 * ((x + y) + 1j * (xy - yx))


def weyl_margins(A, B):
    """Per-k slack in Lambda_k(A) + Lambda_1(B) <= Lambda_k(A+B) <= Lambda_k(A) + Lambda_n(B)."""
    if A.n != B.n:
        raise ContractError(f'dimension mismatch: {A.n} vs {B.n}')
    la = eig_hermitian(A).values
    lb = eig_hermitian(B).values
    lab = eig_hermitian(A + B).values
    return [
        (float(lab[k] - la[k] - lb[0]), float(la[k] + lb[-1] - lab[k]))
        for k in range(A.n)
    ]


def batch_spectra(stack):
    """Ascending eigenvalues of a stack of Hermitian matrices, shape (N, n, n)."""
    stack = np.asarray(stack)
    if stack.shape[-1] == 1:
        return np.real(stack[..., 0])
    return np.linalg.eigvalsh(stack)


def random_hermitian(n, rng):
    """(M + M*)/2 with real and imaginary parts of M uniform in [-1, 1]."""
    m = rng.uniform(size=(n, n)) + 1j * rng.uniform(size=(n, n))
    return HermitianMatrix.from_array(0.5 * (m + m.conj().T))


def random_positive(n, rng):
    """M M* + 1e-6 I, positive definite."""
    m = rng.uniform(size=(n, n)) + 1j * rng.uniform(size=(n, n))
    return HermitianMatrix.from_array(m @ m.conj().T + 1e-6 * np.eye(n), symmetrize=True)
