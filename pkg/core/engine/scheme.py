"""
Wide-stencil monotone discretization of Lambda_1 of the complex Hessian.

Along a direction w the estimate is

    E_w = [L(u; +w, -w) + L(u; +iw, -iw)] / 4

where L is the nonuniform three-point second difference over the absolute
arm lengths. With H_jk = d_j dbar_k u, E_w approximates
sum_jk H_jk w_j conj(w_k) / |w|^2. It is exact on quadratics (also with
shortened arms) and affine decreasing in the center value with slope -c_w.
S_h u = min over the direction set of E_w.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .exprparse import BinOp, Expr, Num, evaluate_at, parse
from .grid import DirectionSet, direction_set, norm2
from .hermitian import HermitianMatrix, batch_spectra, q11_batch
from .operators import OperatorKind, ghat, ghat_extended, in_cone_values

logger = logging.getLogger(__name__)

CENTRAL_REACH = 2


# =============
# Grid function
# =============

class GridFunction:
    """Values on the interior nodes plus a boundary datum for the cut arms.

    Constructors that certify their output attach the ResidualReport as
    `certificate`; derived fields start uncertified.
    """

    def __init__(self, domain, values, boundary=None, certificate=None):
        values = np.array(values, dtype=float)
        if values.shape != (domain.size,):
            raise ContractError(f'expected {domain.size} node values, got shape {values.shape}')
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise ContractError(f'non-finite value at node {bad[0]}', node=int(bad[0]))
        self.domain = domain
        self.values = values
        self.boundary = boundary
        self.certificate = certificate

    @classmethod
    def from_expr(cls, domain, expr, boundary=None):
        """Sample an expression; it doubles as the boundary datum unless one is given."""
        return cls(domain, evaluate_at(expr, domain.coords), boundary=boundary if boundary is not None else expr)

    def boundary_at(self, points):
        if self.boundary is None:
            raise ContractError('missing arm value: the field carries no boundary datum')
        if callable(self.boundary) and not isinstance(self.boundary, Expr):
            return np.asarray(self.boundary(points), dtype=float)
        return evaluate_at(self.boundary, points)

    def with_values(self, values):
        return GridFunction(self.domain, values, boundary=self.boundary)

    def shifted(self, c):
        """u + c, boundary datum included."""
        boundary = None if self.boundary is None else BinOp('+', self.boundary, Num(float(c)))
        return GridFunction(self.domain, self.values + c, boundary=boundary)

    def minus_quadratic(self, eps, z0):
        """u - (eps / 2) |z - z0|^2, boundary datum included."""
        n = self.domain.n
        z0 = [float(x) for x in z0]
        terms = []
        for j in range(n):
            terms.append(f'(x{j + 1} - ({z0[2 * j]!r}))^2 + (y{j + 1} - ({z0[2 * j + 1]!r}))^2')
        bump = parse(' + '.join(terms), n)
        values = self.values - 0.5 * eps * evaluate_at(bump, self.domain.coords)
        boundary = None
        if self.boundary is not None:
            boundary = BinOp('-', self.boundary, BinOp('*', Num(0.5 * eps), bump))
        return GridFunction(self.domain, values, boundary=boundary)

    def __len__(self):
        return self.values.size


# =======
# Stencil
# =======

class Stencil:
    """
    Neighbor indices, weights and center coefficients for every
    (interior node, direction) pair.

    ``nbr`` indexes the extended vector (interior values, then one value per
    boundary point in ``points``). For every pair, E_w = sum(wt * u_ext[nbr]) - cen * u.
    """

    def __init__(self, domain, directions):
        table = domain.arm_table(directions)
        N = domain.size
        norms = np.sqrt(np.array([norm2(w) for w in directions], dtype=float))
        lengths = table.rho * (domain.h * norms)[None, :, None]

        cut = table.target < 0
        self.points = table.points[cut]
        nbr = table.target.copy()
        nbr[cut] = N + np.arange(self.points.shape[0])

        wt = np.empty_like(lengths)
        cen = np.zeros(lengths.shape[:2])
        for plus, minus in ((0, 1), (2, 3)):
            a = lengths[..., plus]
            b = lengths[..., minus]
            wt[..., plus] = 0.5 / (a * (a + b))
            wt[..., minus] = 0.5 / (b * (a + b))
            cen += 0.5 / (a * b)

        self.domain = domain
        self.directions = directions
        self.nbr = nbr
        self.wt = wt
        self.cen = cen
        self.full = ~cut.any(axis=2)
        self.slaved = table.slaved
        self.slave_points = table.slave_points
        self.active = ~table.slaved

    @property
    def size(self):
        return self.domain.size

    @property
    def full_nodes(self):
        return self.full.all(axis=1)

    def extend(self, u):
        """Interior values followed by boundary values at the stencil points."""
        if not self.points.shape[0]:
            return u.values.copy()
        return np.concatenate([u.values, u.boundary_at(self.points)])

    def directional(self, u_ext):
        """E_w at every node and direction, shape (N, D)."""
        A = np.einsum('ndk,ndk->nd', self.wt, u_ext[self.nbr])
        return A - self.cen * u_ext[:self.size, None]

    def apply(self, u_ext):
        return self.directional(u_ext).min(axis=1)

    def neighbor_sums(self, u_ext, nodes=None):
        if nodes is None:
            return np.einsum('ndk,ndk->nd', self.wt, u_ext[self.nbr])
        return np.einsum('ndk,ndk->nd', self.wt[nodes], u_ext[self.nbr[nodes]])

    def coordinate_part(self):
        """Stencil arrays restricted to the coordinate directions e_1, ..., e_n."""
        n = self.domain.n
        return self.nbr[:, :n], self.wt[:, :n], self.cen[:, :n]


def as_stencil(domain, D):
    if isinstance(D, Stencil):
        return D
    if isinstance(D, DirectionSet):
        return Stencil(domain, D)
    return Stencil(domain, direction_set(domain.n, int(D)))


# ===========================
# Directional estimates (one)
# ===========================

@dataclass(frozen=True)
class DirectionalEstimate:
    w: tuple
    value: float
    center: float
    neighbor: float


def _second_difference(u_plus, u_minus, u0, a, b):
    """Nonuniform three-point second difference and its center coefficient."""
    return 2.0 * (u_plus / (a * (a + b)) + u_minus / (b * (a + b)) - u0 / (a * b)), 2.0 / (a * b)


def directional_value(u, node, armset):
    u0 = float(u.values[node])
    values = []
    for arm in armset.arms:
        if arm.kind == 'node':
            values.append(float(u.values[arm.target]))
        else:
            values.append(float(u.boundary_at(np.array([arm.point]))[0]))
    lengths = [arm.length for arm in armset.arms]
    first, c1 = _second_difference(values[0], values[1], u0, lengths[0], lengths[1])
    second, c2 = _second_difference(values[2], values[3], u0, lengths[2], lengths[3])
    value = 0.25 * (first + second)
    center = 0.25 * (c1 + c2)
    return DirectionalEstimate(w=armset.w, value=value, center=center, neighbor=value + center * u0)


# ===============
# Scheme operator
# ===============

def apply_lambda1(u, D):
    """S_h u = min_w E_w(u) at every interior node."""
    stencil = as_stencil(u.domain, D)
    return GridFunction(u.domain, stencil.apply(stencil.extend(u)))


def node_solve(u, node, f_value, D, u_ext=None):
    """Center value solving min_w E_w = f_value at one node, the rest of u held fixed."""
    stencil = as_stencil(u.domain, D)
    if not 0 <= node < stencil.size:
        raise ContractError(f'node {node} is not an interior node', node=node)
    if u_ext is None:
        u_ext = stencil.extend(u)
    A = stencil.neighbor_sums(u_ext, np.array([node]))[0]
    return float(np.min((A - f_value) / stencil.cen[node]))


# =================
# Complex Hessians
# =================

def central_eligible(domain):
    """Nodes at index distance >= 2 from every non-interior lattice point."""
    m = 2 * domain.n
    span = np.arange(-CENTRAL_REACH, CENTRAL_REACH + 1)
    offsets = np.stack(np.meshgrid(*[span] * m, indexing='ij'), axis=-1).reshape(-1, m)
    offsets = offsets[(offsets ** 2).sum(axis=1) <= CENTRAL_REACH ** 2]
    hits = domain.lookup((domain.multi[:, None, :] + offsets[None, :, :]).reshape(-1, m))
    return np.all(hits.reshape(domain.size, -1) >= 0, axis=1)


def central_forms(u, nodes):
    """Real 2n x 2n central-difference Hessians at the given nodes."""
    domain = u.domain
    m = 2 * domain.n
    lattice = np.full(domain.shape, np.nan)
    lattice[tuple(domain.multi.T)] = u.values
    base = domain.multi[nodes]
    eye = np.eye(m, dtype=np.int64)

    def at(offset):
        return lattice[tuple((base + offset).T)]

    h2 = domain.h * domain.h
    center = u.values[nodes]
    Q = np.empty((len(nodes), m, m))
    for a in range(m):
        Q[:, a, a] = (at(eye[a]) - 2.0 * center + at(-eye[a])) / h2
        for b in range(a + 1, m):
            mixed = (at(eye[a] + eye[b]) - at(eye[a] - eye[b])
                     - at(-eye[a] + eye[b]) + at(-eye[a] - eye[b])) / (4.0 * h2)
            Q[:, a, b] = Q[:, b, a] = mixed
    return Q


def central_hessians(u):
    """(eligible mask, (N, n, n) complex Hessians with NaN on ineligible nodes)."""
    eligible = central_eligible(u.domain)
    n = u.domain.n
    H = np.full((u.domain.size, n, n), np.nan, dtype=complex)
    nodes = np.flatnonzero(eligible)
    if nodes.size:
        H[nodes] = q11_batch(central_forms(u, nodes))
    return eligible, H


def central_hessian(u, node):
    if not central_eligible(u.domain)[node]:
        raise ContractError(f'node {node} lacks a full central stencil', node=node)
    H = q11_batch(central_forms(u, np.array([node])))[0]
    return HermitianMatrix.from_array(H, symmetrize=True)


def stencil_hessians(u, stencil):
    """
    Complex Hessians rebuilt from directional estimates:
    H_jj = E_{e_j}, Re H_12 = (E_(1,1) - E_(1,-1)) / 2, Im H_12 = (E_(1,i) - E_(1,-i)) / 2.
    """
    E = stencil.directional(stencil.extend(u))
    n = u.domain.n
    N = u.domain.size
    H = np.zeros((N, n, n), dtype=complex)
    if n == 1:
        H[:, 0, 0] = E[:, 0]
        return H
    D = stencil.directions
    try:
        plus = D.index(((1, 0), (1, 0)))
        minus = D.index(((1, 0), (-1, 0)))
        rot_plus = D.index(((1, 0), (0, 1)))
        rot_minus = D.index(((1, 0), (0, -1)))
    except ValueError:
        raise ContractError('direction set lacks the mixed directions (1, +-1), (1, +-i)')
    H[:, 0, 0] = E[:, 0]
    H[:, 1, 1] = E[:, 1]
    off = 0.5 * (E[:, plus] - E[:, minus]) + 0.5j * (E[:, rot_plus] - E[:, rot_minus])
    H[:, 0, 1] = off
    H[:, 1, 0] = np.conj(off)
    return H


# ===============
# Residual report
# ===============

@dataclass(frozen=True)
class ResidualReport:
    operator: str
    tol: float
    stencil_residual: np.ndarray
    spectral_residual: np.ndarray
    eligible: int
    subsolution: bool
    supersolution: bool
    sub_failures: np.ndarray
    super_failures: np.ndarray

    @property
    def max_stencil(self):
        return _nan_stat(np.abs(self.stencil_residual), np.max)

    @property
    def mean_stencil(self):
        return _nan_stat(np.abs(self.stencil_residual), np.mean)

    @property
    def max_spectral(self):
        return _nan_stat(np.abs(self.spectral_residual), np.max)

    @property
    def mean_spectral(self):
        return _nan_stat(np.abs(self.spectral_residual), np.mean)

    @property
    def worst_sub_node(self):
        return self._worst(self.sub_failures, -self.stencil_residual)

    @property
    def worst_super_node(self):
        return self._worst(self.super_failures, self.stencil_residual)

    def _worst(self, failures, score):
        if not failures.size:
            return None
        score = np.nan_to_num(score[failures], nan=np.inf)
        return int(failures[np.argmax(score)])

    def summary(self):
        return {
            'operator': self.operator,
            'residual_tol': self.tol,
            'stencil_residual_max': self.max_stencil,
            'stencil_residual_mean': self.mean_stencil,
            'spectral_residual_max': self.max_spectral,
            'spectral_residual_mean': self.mean_spectral,
            'spectral_nodes': self.eligible,
            'subsolution': self.subsolution,
            'supersolution': self.supersolution,
            'subsolution_failures': int(self.sub_failures.size),
            'supersolution_failures': int(self.super_failures.size),
        }


def _nan_stat(values, reducer):
    finite = values[np.isfinite(values)]
    return float(reducer(finite)) if finite.size else float('nan')


def _node_values(f, domain):
    if isinstance(f, GridFunction):
        return f.values
    if isinstance(f, Expr):
        return evaluate_at(f, domain.coords)
    return np.broadcast_to(np.asarray(f, dtype=float), (domain.size,))


def residual_report(u, f, spec, D, tol=1e-6):
    """Wide-stencil and spectral residuals with sub/supersolution verdicts.

    Slaved nodes carry boundary data and are left out of the verdicts.
    """
    stencil = as_stencil(u.domain, D)
    f_values = _node_values(f, u.domain)

    if spec.kind == OperatorKind.LAMBDA1:
        discrete = stencil.apply(stencil.extend(u))
        inside = np.ones(u.domain.size, dtype=bool)
    else:
        lam = batch_spectra(stencil_hessians(u, stencil))
        inside = in_cone_values(spec, lam, closed=True)
        discrete = np.where(inside, ghat(spec, lam), np.nan)
    stencil_residual = discrete - f_values

    eligible, H = central_hessians(u)
    spectral_residual = np.full(u.domain.size, np.nan)
    nodes = np.flatnonzero(eligible)
    if nodes.size:
        spectral_residual[nodes] = ghat_extended(spec, batch_spectra(H[nodes])) - f_values[nodes]

    active = stencil.active
    with np.errstate(invalid='ignore'):
        sub_ok = inside & (discrete >= f_values - tol)
        super_ok = ~inside | (np.maximum(np.nan_to_num(discrete, nan=0.0), 0.0) <= f_values + tol)
    sub_failures = np.flatnonzero(active & ~sub_ok)
    super_failures = np.flatnonzero(active & ~super_ok)

    report = ResidualReport(
        operator=spec.label,
        tol=float(tol),
        stencil_residual=stencil_residual,
        spectral_residual=spectral_residual,
        eligible=int(nodes.size),
        subsolution=not sub_failures.size,
        supersolution=not super_failures.size,
        sub_failures=sub_failures,
        super_failures=super_failures,
    )
    logger.debug('Residuals for %s: stencil max %.3e, spectral max %.3e, sub=%s super=%s',
                 spec.label, report.max_stencil, report.max_spectral,
                 report.subsolution, report.supersolution)
    return report
