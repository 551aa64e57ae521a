"""
Uniform lattices over R^2n (n = 1, 2), domain masks and Gaussian-integer directions.

A domain is {level < 0}. Lattice arms that leave the domain are shortened to
the exact boundary crossing (bisection on the level expression) and cached
per (node, lattice offset).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exceptions import ContractError
from .exprparse import evaluate_at, parse

logger = logging.getLogger(__name__)

MAX_GRID_DIMENSION = 2
CROSSING_TOL = 1e-10
CROSSING_ITERATIONS = 60
CROSSING_PRESCAN = 8
ARM_CLAMP = 1e-8

EXTERIOR, INTERIOR, BOUNDARY_ADJACENT = 0, 1, 2


# ============================
# Gaussian-integer arithmetic
# ============================

def _gmul(p, q):
    return (p[0] * q[0] - p[1] * q[1], p[0] * q[1] + p[1] * q[0])


def _gdivmod(p, q):
    """Quotient rounded to the nearest Gaussian integer, and remainder."""
    norm = q[0] * q[0] + q[1] * q[1]
    re = p[0] * q[0] + p[1] * q[1]
    im = p[1] * q[0] - p[0] * q[1]
    quotient = (round(Fraction(re, norm)), round(Fraction(im, norm)))
    product = _gmul(quotient, q)
    return quotient, (p[0] - product[0], p[1] - product[1])


def _gcd(p, q):
    while q != (0, 0):
        _, remainder = _gdivmod(p, q)
        p, q = q, remainder
    return p


_UNITS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def canonicalize(w):
    """Reduce a Gaussian-integer vector by its gcd and normalize its phase.

    The first nonzero component ends up with positive real part and
    nonnegative imaginary part.
    """
    w = tuple((int(a), int(b)) for a, b in w)
    g = (0, 0)
    for c in w:
        g = _gcd(g, c) if g != (0, 0) else c
    if g == (0, 0):
        raise ContractError('the zero vector is not a direction')
    w = tuple(_gdivmod(c, g)[0] for c in w)
    lead = next(c for c in w if c != (0, 0))
    for unit in _UNITS:
        rotated = _gmul(lead, unit)
        if rotated[0] > 0 and rotated[1] >= 0:
            return tuple(_gmul(c, unit) for c in w)
    raise AssertionError('unreachable: some unit rotates into the first quadrant')


def _line_key(w):
    """Identifies the complex line spanned by w (projective point)."""
    lead = next(i for i, c in enumerate(w) if c != (0, 0))
    a, b = w[lead]
    norm = a * a + b * b
    ratios = []
    for c, d in w[lead + 1:]:
        ratios.append((Fraction(c * a + d * b, norm), Fraction(d * a - c * b, norm)))
    return lead, tuple(ratios)


def real_offset(w):
    """Lattice displacement (x1, y1, x2, y2, ...) of a Gaussian-integer vector."""
    return np.array([part for c in w for part in c], dtype=np.int64)


def times_i(w):
    return tuple((-b, a) for a, b in w)


def norm2(w):
    return sum(a * a + b * b for a, b in w)


@dataclass(frozen=True)
class DirectionSet:
    """Canonical Gaussian-integer directions; coordinate directions come first."""

    n: int
    width: int
    members: tuple

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def index(self, w):
        return self.members.index(canonicalize(w))

    def arm_offsets(self):
        """Integer lattice offsets of the arms +w, -w, +iw, -iw, shape (D, 4, 2n)."""
        table = []
        for w in self.members:
            forward = real_offset(w)
            rotated = real_offset(times_i(w))
            table.append([forward, -forward, rotated, -rotated])
        return np.array(table, dtype=np.int64)


def direction_set(n, W):
    """One representative per complex line spanned by vectors with |Re| + |Im| <= W per entry."""
    if W < 1:
        raise ContractError(f'direction width must be >= 1, got {W}')
    if not 1 <= n <= MAX_GRID_DIMENSION:
        raise ContractError(f'grids support n = 1, 2 only, got {n}')
    coordinate = [tuple((1, 0) if j == k else (0, 0) for j in range(n)) for k in range(n)]
    if n == 1:
        return DirectionSet(n=1, width=W, members=tuple(coordinate))

    entries = [(a, b) for a in range(-W, W + 1) for b in range(-W, W + 1) if abs(a) + abs(b) <= W]
    best = {}
    for c1 in entries:
        for c2 in entries:
            if c1 == (0, 0) and c2 == (0, 0):
                continue
            w = canonicalize((c1, c2))
            key = _line_key(w)
            if key not in best or (norm2(w), w) < (norm2(best[key]), best[key]):
                best[key] = w

    others = sorted((w for w in best.values() if w not in coordinate), key=lambda w: (norm2(w), w))
    return DirectionSet(n=n, width=W, members=tuple(coordinate) + tuple(others))


# =======
# Presets
# =======

@dataclass(frozen=True)
class DomainPreset:
    """Named domain with its exhaustion psi (Lambda_1(D^2 psi) >= 1) when one is known."""

    name: str
    n: int
    level_text: str
    psi_text: str = None
    b_regular: bool = False
    radius: float = 1.0

    @property
    def level(self):
        return parse(self.level_text, self.n)

    @property
    def psi(self):
        return parse(self.psi_text, self.n) if self.psi_text else None

    def default_box(self, h):
        half = math.ceil(self.radius / h - 1e-9) * h + h
        return [(-half, half)] * (2 * self.n)


def _squared_norm_text(n, shift=0.0):
    terms = []
    for j in range(1, n + 1):
        x = f'(x{j} - ({shift!r}))' if j == 1 and shift else f'x{j}'
        terms.append(f'{x}^2 + y{j}^2')
    return ' + '.join(terms)


def ball_preset(n, R=1.0):
    text = f't - {float(R)!r}^2'
    return DomainPreset('ball', n, text, psi_text=text, b_regular=True, radius=float(R))


def ellipsoid_preset(n, weights):
    weights = [float(a) for a in weights]
    if len(weights) != n or min(weights) <= 0:
        raise ContractError(f'ellipsoid needs {n} positive weights')
    level = ' + '.join(f'{a!r}*(x{j}^2 + y{j}^2)' for j, a in enumerate(weights, 1)) + ' - 1'
    psi = f'({level}) / {min(weights)!r}'
    return DomainPreset('ellipsoid', n, level, psi_text=psi, b_regular=True,
                        radius=1.0 / math.sqrt(min(weights)))


def two_balls_preset(n, R=1.0, R2=1.0, offset=0.5):
    """Intersection of the ball of radius R at 0 and radius R2 at offset * e_1."""
    level = (
        f'max(t - {float(R)!r}^2, {_squared_norm_text(n, float(offset))} - {float(R2)!r}^2)'
    )
    return DomainPreset('two_balls', n, level, psi_text=level, b_regular=True,
                        radius=min(float(R), float(R2) + abs(float(offset))))


def polydisc_preset(n, R=1.0):
    """Product of discs; not B-regular, so no exhaustion is offered."""
    parts = [f'x{j}^2 + y{j}^2 - {float(R)!r}^2' for j in range(1, n + 1)]
    level = parts[0] if n == 1 else f"max({', '.join(parts)})"
    return DomainPreset('polydisc', n, level, b_regular=(n == 1), radius=float(R) * math.sqrt(n),
                        psi_text=(level if n == 1 else None))


def custom_preset(n, level_text, radius):
    return DomainPreset('custom', n, level_text, radius=float(radius))


# ======
# Domain
# ======

@dataclass(frozen=True)
class Arm:
    kind: str           # 'node' or 'boundary'
    rho: float
    length: float
    target: int = None  # interior index for 'node' arms
    point: tuple = None  # boundary point for 'boundary' arms


@dataclass(frozen=True)
class ArmSet:
    node: int
    w: tuple
    arms: tuple


@dataclass
class ArmTable:
    """Arms of every (interior node, direction) pair."""

    target: np.ndarray      # (N, D, 4) interior index or -1
    rho: np.ndarray         # (N, D, 4) clamped fraction of the full arm
    points: np.ndarray      # (N, D, 4, 2n) boundary points (NaN on node arms)
    slaved: np.ndarray      # (N,) bool, some arm was clamped
    slave_points: np.ndarray  # (N, 2n) crossing point a slaved node is tied to


class GridDomain:
    """Masked uniform lattice with lazily cached boundary crossings."""

    def __init__(self, n, h, level, box, preset=None):
        if not 1 <= n <= MAX_GRID_DIMENSION:
            raise ContractError(f'grids support n = 1, 2 only, got {n}')
        if h <= 0:
            raise ContractError(f'grid spacing must be positive, got {h}')
        if len(box) == 1:
            box = list(box) * (2 * n)
        if len(box) != 2 * n:
            raise ContractError(f'box needs 1 or {2 * n} (lo, hi) pairs, got {len(box)}')

        self.n = n
        self.h = float(h)
        self.level = level
        self.preset = preset
        self.box = [(float(lo), float(hi)) for lo, hi in box]
        self.lower = np.array([lo for lo, _ in self.box])
        self.shape = tuple(int(math.floor((hi - lo) / self.h + 1e-9)) + 1 for lo, hi in self.box)

        multi = np.indices(self.shape).reshape(2 * n, -1).T
        coords = self.lower + self.h * multi
        level_values = evaluate_at(level, coords)
        mask = (level_values < 0).reshape(self.shape)

        if not mask.any():
            raise ContractError('empty interior: no lattice node satisfies level < 0')
        face = np.zeros(self.shape, dtype=bool)
        for axis in range(2 * n):
            index = [slice(None)] * (2 * n)
            index[axis] = 0
            face[tuple(index)] = True
            index[axis] = -1
            face[tuple(index)] = True
        if (mask & face).any():
            raise ContractError('the domain reaches the bounding box; enlarge grid.box')

        self.mask = mask
        self.index_of = np.full(self.shape, -1, dtype=np.int64)
        flat = np.flatnonzero(mask)
        self.index_of.reshape(-1)[flat] = np.arange(flat.size)
        self.multi = multi[flat]
        self.coords = coords[flat]
        self.size = flat.size
        self._crossings = {}

        self.classification = np.where(mask, INTERIOR, EXTERIOR).astype(np.int8)
        for axis in range(2 * n):
            for step in (1, -1):
                neighbor = np.roll(mask, step, axis=axis)
                adjacent = neighbor & ~mask
                self.classification[adjacent] = BOUNDARY_ADJACENT
        logger.debug('Built %s domain: %d interior nodes on lattice %s', preset.name if preset else 'custom',
                     self.size, self.shape)

    # ------------------------------------------------------------------ lattice

    def level_at(self, points):
        return evaluate_at(self.level, points)

    def lookup(self, multi):
        """Interior index of lattice multi-indices (M, 2n); -1 outside the domain or box."""
        multi = np.atleast_2d(multi)
        inside = np.all((multi >= 0) & (multi < np.array(self.shape)), axis=1)
        result = np.full(multi.shape[0], -1, dtype=np.int64)
        if inside.any():
            result[inside] = self.index_of[tuple(multi[inside].T)]
        return result

    def counts(self):
        return {
            'interior': int((self.classification == INTERIOR).sum()),
            'boundary_adjacent': int((self.classification == BOUNDARY_ADJACENT).sum()),
            'exterior': int((self.classification == EXTERIOR).sum()),
        }

    # ---------------------------------------------------------------- crossings

    def _bisect(self, starts, steps):
        """Fraction of each step at which the level first changes sign."""
        k = starts.shape[0]
        samples = np.linspace(0.0, 1.0, CROSSING_PRESCAN + 1)[1:]
        probe = self.level_at(starts[:, None, :] + samples[None, :, None] * steps[:, None, :])
        outside = probe >= 0
        first = np.argmax(outside, axis=1)
        hi = samples[first]
        lo = np.where(first > 0, samples[np.maximum(first - 1, 0)], 0.0)
        for _ in range(CROSSING_ITERATIONS):
            mid = 0.5 * (lo + hi)
            below = self.level_at(starts + mid[:, None] * steps) < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        residual = np.abs(self.level_at(starts + hi[:, None] * steps))
        if k and residual.max() > CROSSING_TOL:
            logger.warning('Boundary crossing residual %.3e exceeds %.0e', residual.max(), CROSSING_TOL)
        return hi

    def boundary_crossing(self, z, d):
        """First rho in (0, 1] with z + rho * d on the boundary."""
        z = np.asarray(z, dtype=float)
        d = np.asarray(d, dtype=float)
        if not self.level_at(z) < 0:
            raise ContractError('crossing search must start inside the domain')
        if not self.level_at(z + d) >= 0:
            raise ContractError('no sign change of the level along the step')
        return float(self._bisect(z[None, :], d[None, :])[0])

    def crossings(self, nodes, offset):
        """Cached crossings for interior nodes along an integer lattice offset."""
        offset_key = tuple(int(x) for x in offset)
        missing = [node for node in nodes if (int(node), offset_key) not in self._crossings]
        if missing:
            missing = np.array(missing, dtype=np.int64)
            steps = np.broadcast_to(self.h * np.asarray(offset, dtype=float), (missing.size, 2 * self.n))
            values = self._bisect(self.coords[missing], np.array(steps))
            for node, rho in zip(missing.tolist(), values.tolist()):
                self._crossings.setdefault((node, offset_key), rho)
        return np.array([self._crossings[(int(node), offset_key)] for node in nodes], dtype=float)

    # ---------------------------------------------------------------------- arms

    def arm_table(self, dirset):
        offsets = dirset.arm_offsets()
        D = offsets.shape[0]
        N = self.size
        target = np.full((N, D, 4), -1, dtype=np.int64)
        rho = np.ones((N, D, 4))
        points = np.full((N, D, 4, 2 * self.n), np.nan)
        slaved = np.zeros(N, dtype=bool)
        slave_points = np.full((N, 2 * self.n), np.nan)

        for d in range(D):
            for a in range(4):
                offset = offsets[d, a]
                hits = self.lookup(self.multi + offset)
                target[:, d, a] = hits
                cut = np.flatnonzero(hits < 0)
                if not cut.size:
                    continue
                raw = self.crossings(cut, offset)
                clamped = raw < ARM_CLAMP
                fraction = np.maximum(raw, ARM_CLAMP)
                rho[cut, d, a] = fraction
                crossing = self.coords[cut] + (raw * self.h)[:, None] * offset[None, :]
                points[cut, d, a] = self.coords[cut] + (fraction * self.h)[:, None] * offset[None, :]
                newly = cut[clamped & ~slaved[cut]]
                slave_points[newly] = crossing[clamped & ~slaved[cut]]
                slaved[cut[clamped]] = True

        if slaved.any():
            logger.info('%d nodes lie within %.0e arm lengths of the boundary and are slaved to it',
                        int(slaved.sum()), ARM_CLAMP)
        return ArmTable(target=target, rho=rho, points=points, slaved=slaved, slave_points=slave_points)

    def arms(self, node, w):
        """Resolve the four arms z +- h w, z +- i h w of one interior node."""
        if not 0 <= node < self.size:
            raise ContractError(f'node {node} is not an interior node', node=node)
        length = self.h * math.sqrt(norm2(w))
        forward = real_offset(w)
        rotated = real_offset(times_i(w))
        result = []
        for offset in (forward, -forward, rotated, -rotated):
            hit = int(self.lookup(self.multi[node] + offset)[0])
            if hit >= 0:
                result.append(Arm('node', 1.0, length, target=hit))
                continue
            raw = float(self.crossings([node], offset)[0])
            fraction = max(raw, ARM_CLAMP)
            point = self.coords[node] + fraction * self.h * offset
            result.append(Arm('boundary', fraction, fraction * length, point=tuple(point.tolist())))
        return ArmSet(node=node, w=tuple(w), arms=tuple(result))


def build_domain(n, h, level, box, preset=None):
    return GridDomain(n, h, level, box, preset=preset)


def build_preset_domain(preset, h, box=None):
    return GridDomain(preset.n, h, preset.level, box or preset.default_box(h), preset=preset)
