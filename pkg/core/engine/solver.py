"""
Discrete Dirichlet problem for Lambda_1(D^2_C u) = f and its relatives.

Perron iteration starts from the barrier B psi + phi_tilde and raises node
values with exact per-node solves until nothing moves; the discrete
harmonic extension of phi bounds every iterate from above.
"""

import itertools
import logging
import time
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .exceptions import ContractError
from .exprparse import BinOp, Expr, Num, evaluate_at
from .grid import GridDomain, direction_set
from .hermitian import batch_spectra, q11_batch
from .kernels import laplace_sweep, perron_sweep
from .operators import (
    OperatorKind, OperatorSpec, cone_shift_values, ghat, in_cone_values, known_constant,
)
from .scheme import (
    GridFunction, Stencil, as_stencil, central_eligible, central_forms, residual_report,
    stencil_hessians,
)

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-14
EXTENSION_MATCH_TOL = 1e-8
PSH_TOL = 1e-9
PROBE_EPSILONS = (1e-2, 1e-1)
PROBE_TOL = 1e-12
THETA_START = 0.5
THETA_FLOOR = 1e-6
THETA_RECOVERY = 1.05
DIVERGENCE_FACTOR = 1e8
LOG_EVERY = 1000
MAX_COLOR_MODULUS = 16


class SweepOrder:
    SYMMETRIC = 'symmetric'
    COLORED = 'colored'
    CHOICES = (SYMMETRIC, COLORED)


@dataclass
class ProblemSpec:
    domain: GridDomain
    f: Expr
    phi: Expr
    operator: OperatorSpec
    phi_tilde: Expr = None
    width: int = 1
    tol: float = 1e-10
    max_sweeps: int = 100_000
    residual_tol: float = 1e-6
    margin: float = 0.1
    order: str = SweepOrder.SYMMETRIC
    max_iterations: int = 100_000
    initial: Expr = None

    def __post_init__(self):
        if self.operator.n != self.domain.n:
            raise ContractError(
                f'operator dimension {self.operator.n} does not match domain dimension {self.domain.n}'
            )
        if self.order not in SweepOrder.CHOICES:
            raise ContractError(f"unknown sweep order '{self.order}'")
        values = evaluate_at(self.f, self.domain.coords)
        bad = np.flatnonzero(~(values > 0))
        if bad.size:
            node = int(bad[np.argmin(np.nan_to_num(values[bad], nan=-np.inf))])
            point = ', '.join(f'{x:g}' for x in self.domain.coords[node])
            raise ContractError(
                f'f must be positive: f = {values[node]:g} at node {node} ({point})', node=node
            )
        self.f_values = values

    @cached_property
    def directions(self):
        return direction_set(self.domain.n, self.width)

    @cached_property
    def stencil(self):
        return Stencil(self.domain, self.directions)

    @property
    def extension(self):
        """phi_tilde, or phi itself on B-regular presets; None when no extension is known."""
        if self.phi_tilde is not None:
            return self.phi_tilde
        preset = self.domain.preset
        if preset is not None and preset.b_regular:
            return self.phi
        return None

    def boundary_field(self, values):
        return GridFunction(self.domain, values, boundary=self.phi)


@dataclass(frozen=True)
class SolveReport:
    solution: GridFunction
    sweeps: int
    max_update: float
    residual: object
    min_updates: np.ndarray = field(repr=False)
    wall_time: float
    converged: bool
    method: str
    experimental: bool = False
    diverged: bool = False
    cone_projections: int = 0
    final_residual: float = float('nan')

    @property
    def flagged(self):
        return not self.converged

    @property
    def monotone(self):
        if not self.min_updates.size:
            return True
        return bool(self.min_updates.min() >= -MONOTONE_SLACK)

    def summary(self):
        data = {
            'method': self.method,
            'converged': self.converged,
            'flagged': self.flagged,
            'experimental': self.experimental,
            'diverged': self.diverged,
            'sweeps': self.sweeps,
            'max_update': self.max_update,
            'monotone': self.monotone,
            'min_update': float(self.min_updates.min()) if self.min_updates.size else float('nan'),
            'cone_projections': self.cone_projections,
            'final_residual': self.final_residual,
            'wall_time': self.wall_time,
        }
        data.update(self.residual.summary())
        return data


@dataclass(frozen=True)
class ComparisonReport:
    boundary_gap: float
    measured_gap: float
    interior_violation: float
    tol: float
    worst_node: int
    probe: tuple
    probe_passed: bool

    @property
    def passed(self):
        return self.interior_violation <= self.boundary_gap + self.tol

    def summary(self):
        return {
            'boundary_gap': self.boundary_gap,
            'measured_boundary_gap': self.measured_gap,
            'interior_violation': self.interior_violation,
            'comparison_tol': self.tol,
            'worst_node': self.worst_node,
            'probe_epsilons': [eps for eps, _ in self.probe],
            'probe_errors': [err for _, err in self.probe],
            'probe_passed': self.probe_passed,
            'verdict': 'pass' if self.passed else 'fail',
        }


# =======================
# Barrier and upper bound
# =======================

def _pin_slaved(u_ext, stencil, phi):
    if stencil.slaved.any():
        nodes = np.flatnonzero(stencil.slaved)
        u_ext[nodes] = evaluate_at(phi, stencil.slave_points[nodes])


def check_extension(p, extension):
    """phi_tilde must agree with phi at the crossings and pass S_h phi_tilde >= -tol."""
    stencil = p.stencil
    if stencil.points.shape[0]:
        mismatch = np.abs(evaluate_at(extension, stencil.points) - evaluate_at(p.phi, stencil.points))
        if mismatch.max() > EXTENSION_MATCH_TOL:
            raise ContractError(
                f'phi_tilde differs from phi on the boundary by {mismatch.max():.3e}'
            )
    field_ = GridFunction.from_expr(p.domain, extension)
    values = stencil.apply(stencil.extend(field_))
    bad = np.flatnonzero(stencil.active & (values < -PSH_TOL))
    if bad.size:
        node = int(bad[np.argmin(values[bad])])
        raise ContractError(
            f'phi_tilde is not plurisubharmonic: S_h phi_tilde = {values[node]:.6g} at node {node}',
            node=node,
        )


def barrier_subsolution(p, margin=None):
    """u0 = B psi + phi_tilde with B = max f * (1 + margin)."""
    margin = p.margin if margin is None else margin
    if margin < 0:
        raise ContractError(f'barrier margin must be >= 0, got {margin}')
    preset = p.domain.preset
    psi = preset.psi if preset is not None else None
    if psi is None:
        raise ContractError('no plurisubharmonic exhaustion is known for this domain')
    extension = p.extension
    if extension is None:
        raise ContractError('no plurisubharmonic extension of phi; set boundary.phi_tilde')
    check_extension(p, extension)

    B = float(p.f_values.max()) * (1.0 + margin)
    coords = p.domain.coords
    barrier = p.boundary_field(B * evaluate_at(psi, coords) + evaluate_at(extension, coords))
    lambda1 = OperatorSpec(OperatorKind.LAMBDA1, p.domain.n)
    report = residual_report(barrier, p.f_values, lambda1, p.stencil, p.residual_tol)
    if not report.subsolution:
        node = report.worst_sub_node
        raise ContractError(f'barrier is not a certified subsolution (worst node {node})', node=node)
    barrier.certificate = report
    logger.info('Barrier subsolution with B = %.6g on %d nodes', B, p.domain.size)
    return barrier


def harmonic_solve(p):
    """Discrete Laplace problem sum_j E_{e_j} = 0 with boundary data phi."""
    start_time = time.perf_counter()
    stencil = p.stencil
    nbr, wt, cen = (np.ascontiguousarray(a) for a in stencil.coordinate_part())
    initial = p.boundary_field(evaluate_at(p.phi, p.domain.coords))
    u_ext = stencil.extend(initial)
    _pin_slaved(u_ext, stencil, p.phi)

    orders = (np.arange(p.domain.size, dtype=np.int64), np.arange(p.domain.size, dtype=np.int64)[::-1].copy())
    active = np.ascontiguousarray(stencil.active)
    converged = False
    max_update = np.inf
    sweeps = 0
    while sweeps < p.max_sweeps:
        max_update = laplace_sweep(u_ext, nbr, wt, cen, orders[sweeps % 2], active)
        sweeps += 1
        if max_update <= p.tol:
            converged = True
            break

    if not converged:
        logger.warning('Laplace sweeps hit the cap of %d (last update %.3e)', p.max_sweeps, max_update)
    solution = p.boundary_field(u_ext[:p.domain.size])
    lambda1 = OperatorSpec(OperatorKind.LAMBDA1, p.domain.n)
    residual = residual_report(solution, p.f_values, lambda1, stencil, p.residual_tol)
    return SolveReport(
        solution=solution, sweeps=sweeps, max_update=float(max_update), residual=residual,
        min_updates=np.empty(0), wall_time=time.perf_counter() - start_time,
        converged=converged, method='laplace',
    )


def harmonic_supersolution(p):
    """Discrete harmonic extension of phi, certified as a supersolution."""
    report = harmonic_solve(p)
    if not report.residual.supersolution:
        node = report.residual.worst_super_node
        raise ContractError(f'harmonic extension is not a certified supersolution (worst node {node})', node=node)
    solution = report.solution
    solution.certificate = report.residual
    return solution


# ================
# Perron iteration
# ================

def color_classes(stencil):
    """Node groups with no arm joining two members; refused for W > 1."""
    if stencil.directions.width > 1:
        raise ContractError('colored sweeps need W = 1 (wider arms break the color separation)')
    offsets = stencil.directions.arm_offsets().reshape(-1, 2 * stencil.domain.n)
    for modulus in range(2, MAX_COLOR_MODULUS + 1):
        for coefficients in itertools.product(range(modulus), repeat=offsets.shape[1]):
            c = np.array(coefficients)
            if np.all((offsets @ c) % modulus != 0):
                colors = (stencil.domain.multi @ c) % modulus
                groups = [np.flatnonzero((colors == k) & stencil.active) for k in range(modulus)]
                logger.debug('Coloring by %s mod %d', coefficients, modulus)
                return [g for g in groups if g.size]
    raise ContractError('no separating coloring found')


def _colored_sweep(u_ext, stencil, f, groups):
    max_update = 0.0
    min_update = np.inf
    for nodes in groups:
        A = stencil.neighbor_sums(u_ext, nodes)
        new = np.min((A - f[nodes, None]) / stencil.cen[nodes], axis=1)
        delta = new - u_ext[nodes]
        u_ext[nodes] = new
        max_update = max(max_update, float(np.abs(delta).max()))
        min_update = min(min_update, float(delta.min()))
    return max_update, min_update


def _initial_field(p, initial):
    if initial is not None:
        return initial
    if p.initial is not None:
        return p.boundary_field(evaluate_at(p.initial, p.domain.coords))
    return barrier_subsolution(p)


def solve_lambda1(p, initial=None):
    """Gauss-Seidel Perron iteration for the wide-stencil equation S_h u = f."""
    if p.operator.kind != OperatorKind.LAMBDA1:
        raise ContractError(f'solve_lambda1 needs the lambda1 operator, got {p.operator.label}')
    start_time = time.perf_counter()
    stencil = p.stencil
    N = p.domain.size
    start = _initial_field(p, initial)
    u_ext = stencil.extend(p.boundary_field(start.values))
    _pin_slaved(u_ext, stencil, p.phi)
    f = np.ascontiguousarray(p.f_values)

    if p.order == SweepOrder.COLORED:
        groups = color_classes(stencil)

        def sweep(k):
            return _colored_sweep(u_ext, stencil, f, groups if k % 2 == 0 else groups[::-1])
    else:
        orders = (np.arange(N, dtype=np.int64), np.arange(N, dtype=np.int64)[::-1].copy())
        active = np.ascontiguousarray(stencil.active)

        def sweep(k):
            return perron_sweep(u_ext, stencil.nbr, stencil.wt, stencil.cen, f, orders[k % 2], active)

    min_updates = []
    max_update = np.inf
    converged = False
    while len(min_updates) < p.max_sweeps:
        max_update, min_update = sweep(len(min_updates))
        min_updates.append(min_update)
        if len(min_updates) % LOG_EVERY == 0:
            logger.debug('Sweep %d: max update %.3e', len(min_updates), max_update)
        if max_update <= p.tol:
            converged = True
            break

    min_updates = np.array(min_updates)
    solution = p.boundary_field(u_ext[:N])
    residual = residual_report(solution, p.f_values, p.operator, stencil, p.residual_tol)
    report = SolveReport(
        solution=solution, sweeps=len(min_updates), max_update=float(max_update), residual=residual,
        min_updates=min_updates, wall_time=time.perf_counter() - start_time,
        converged=converged, method=f'perron-{p.order}', final_residual=residual.max_stencil,
    )
    if converged:
        logger.info('Perron iteration converged in %d sweeps (residual %.3e)', report.sweeps, residual.max_stencil)
    else:
        logger.warning('Perron iteration hit the cap of %d sweeps (last update %.3e)', p.max_sweeps, max_update)
    if not report.monotone:
        logger.warning('Perron iteration was not monotone: smallest update %.3e', min_updates.min())
    return report


# ======================
# General G (damped)
# ======================

def _general_operator(p, values, eligible_nodes):
    """G at every node (central Hessian where eligible, stencil Hessian in the layer)."""
    field_ = p.boundary_field(values)
    H = stencil_hessians(field_, p.stencil)
    if eligible_nodes.size:
        H[eligible_nodes] = q11_batch(central_forms(field_, eligible_nodes))
    lam = batch_spectra(H)
    outside = np.flatnonzero(~in_cone_values(p.operator, lam, closed=True))
    for i in outside:
        lam[i] += cone_shift_values(p.operator, lam[i])
    return ghat(p.operator, lam), int(outside.size)


def lambda1_weight(spec):
    """a_1 when the operator is a_1 * Lambda_1 (an eigen_combination with a_2 = ... = 0), else None."""
    if spec.kind != OperatorKind.EIGEN_COMBINATION:
        return None
    a = spec.a
    if a[0] > 0 and not any(a[1:]):
        return float(a[0])
    return None


def _solve_weighted_lambda1(p, weight, initial):
    reduced = replace(
        p, f=BinOp('/', p.f, Num(weight)), operator=OperatorSpec(OperatorKind.LAMBDA1, p.domain.n),
    )
    logger.info('%s reduces to Lambda_1 = f / %.6g; using the Perron iteration', p.operator.label, weight)
    return solve_lambda1(reduced, initial=initial)


def solve_general(p, initial=None):
    """Damped explicit iteration u <- u + theta / d (G(D^2 u) - f); experimental.

    A multiple of Lambda_1 is handed to the Perron iteration on f / a_1.
    """
    weight = lambda1_weight(p.operator)
    if weight is not None:
        return _solve_weighted_lambda1(p, weight, initial)
    start_time = time.perf_counter()
    stencil = p.stencil
    n = p.domain.n
    start = _initial_field(p, initial)
    u = start.values.copy()
    if stencil.slaved.any():
        u[stencil.slaved] = evaluate_at(p.phi, stencil.slave_points[stencil.slaved])
    active = stencil.active
    eligible_nodes = np.flatnonzero(central_eligible(p.domain))
    scale = max(1.0, known_constant(p.operator) or 1.0)
    d = scale * n * stencil.cen.max(axis=1)

    G, projected = _general_operator(p, u, eligible_nodes)
    r = np.where(active, G - p.f_values, 0.0)
    res = float(np.abs(r).max())
    initial_res = res
    theta = THETA_START
    projections = projected
    converged = diverged = False
    iterations = 0

    while iterations < p.max_iterations:
        if res <= p.residual_tol:
            converged = True
            break
        iterations += 1
        u = u + theta * r / d
        G, projected = _general_operator(p, u, eligible_nodes)
        projections += projected
        if projected:
            logger.debug('Iteration %d: %d Hessians shifted into the cone', iterations, projected)
        r = np.where(active, G - p.f_values, 0.0)
        new_res = float(np.abs(r).max())
        if not np.isfinite(new_res) or new_res > DIVERGENCE_FACTOR * (1.0 + initial_res):
            diverged = True
            res = new_res
            break
        if new_res > res:
            theta = max(0.5 * theta, THETA_FLOOR)
        else:
            theta = min(THETA_START, THETA_RECOVERY * theta)
        res = new_res
        if iterations % LOG_EVERY == 0:
            logger.debug('Iteration %d: residual %.3e, theta %.3e', iterations, res, theta)

    if projections:
        logger.info('%d Hessian evaluations were shifted into the %s cone', projections, p.operator.label)
    if diverged:
        logger.warning('General solver diverged after %d iterations (residual %s)', iterations, res)
    elif not converged:
        logger.warning('General solver hit the cap of %d iterations (residual %.3e)', p.max_iterations, res)
    else:
        logger.info('General solver converged in %d iterations (residual %.3e)', iterations, res)

    solution = p.boundary_field(u if np.all(np.isfinite(u)) else start.values)
    residual = residual_report(solution, p.f_values, p.operator, stencil, p.residual_tol)
    return SolveReport(
        solution=solution, sweeps=iterations, max_update=float('nan'), residual=residual,
        min_updates=np.empty(0), wall_time=time.perf_counter() - start_time,
        converged=converged, method='general', experimental=True, diverged=diverged,
        cone_projections=projections, final_residual=res,
    )


def solve(p, initial=None):
    if p.operator.kind == OperatorKind.LAMBDA1:
        return solve_lambda1(p, initial=initial)
    return solve_general(p, initial=initial)


# ======================
# Comparison and gluing
# ======================

def _certify(u, f, stencil, tol, want):
    spec = OperatorSpec(OperatorKind.LAMBDA1, u.domain.n)
    report = residual_report(u, f, spec, stencil, tol)
    if want == 'sub' and not report.subsolution:
        node = report.worst_sub_node
        raise ContractError(f'not a certified subsolution (worst node {node})', node=node)
    if want == 'super' and not report.supersolution:
        node = report.worst_super_node
        raise ContractError(f'not a certified supersolution (worst node {node})', node=node)
    return report


def comparison_check(u, v, f, D, tol=1e-9, residual_tol=1e-6, boundary_gap=None):
    """Check u <= v + boundary gap for a certified subsolution u and supersolution v."""
    stencil = as_stencil(u.domain, D)
    _certify(u, f, stencil, residual_tol, 'sub')
    _certify(v, f, stencil, residual_tol, 'super')

    measured = 0.0
    if stencil.points.shape[0]:
        measured = max(measured, float((u.boundary_at(stencil.points) - v.boundary_at(stencil.points)).max()))
    if stencil.slaved.any():
        measured = max(measured, float((u.values - v.values)[stencil.slaved].max()))
    gap = measured if boundary_gap is None else max(float(boundary_gap), 0.0)

    difference = u.values - v.values
    worst = int(np.argmax(difference))
    violation = max(float(difference[worst]), 0.0)

    z0 = u.domain.coords[worst]
    full = stencil.full_nodes
    base = stencil.apply(stencil.extend(u))
    probe = []
    for eps in PROBE_EPSILONS:
        shifted = u.minus_quadratic(eps, z0)
        values = stencil.apply(stencil.extend(shifted))
        error = float(np.abs(values - (base - 0.5 * eps))[full].max()) if full.any() else 0.0
        probe.append((eps, error))
    probe_tol = PROBE_TOL * max(1.0, float(np.abs(u.values).max()))
    probe_passed = all(error <= probe_tol for _, error in probe)
    if not probe_passed:
        logger.warning('Quadratic-shift probe failed: %s', probe)

    report = ComparisonReport(
        boundary_gap=gap, measured_gap=measured, interior_violation=violation, tol=tol,
        worst_node=worst, probe=tuple(probe), probe_passed=probe_passed,
    )
    logger.info('Comparison %s: violation %.3e, boundary gap %.3e',
                'passed' if report.passed else 'failed', violation, gap)
    return report


def glue_boundary(domain, stencil, G):
    """Nodes of G with an arm leaving G (into Omega minus G or to the boundary)."""
    G = np.asarray(G, dtype=bool)
    extended = np.concatenate([G, np.zeros(stencil.points.shape[0], dtype=bool)])
    leaves = ~extended[stencil.nbr].all(axis=(1, 2))
    return G & leaves


def glue_max(u, v, f, G, D, residual_tol=1e-6, tol=1e-12):
    """max(u, v) on G and v elsewhere, for u <= v on the boundary nodes of G.

    The result carries its subsolution certificate; a field that fails it
    raises ContractError.
    """
    stencil = as_stencil(v.domain, D)
    G = np.asarray(G, dtype=bool)
    if G.shape != (v.domain.size,):
        raise ContractError(f'region mask must have {v.domain.size} entries')
    edge = glue_boundary(v.domain, stencil, G)

    excess = np.where(edge, u.values - v.values, -np.inf)
    if edge.any() and excess.max() > tol:
        node = int(np.argmax(excess))
        raise ContractError(f'u exceeds v by {excess[node]:.3e} on the edge of G at node {node}', node=node)

    _certify(v, f, stencil, residual_tol, 'sub')
    spec = OperatorSpec(OperatorKind.LAMBDA1, u.domain.n)
    report_u = residual_report(
        GridFunction(u.domain, u.values, boundary=u.boundary if u.boundary is not None else v.boundary),
        f, spec, stencil, residual_tol,
    )
    inner = G & ~edge
    bad = np.intersect1d(report_u.sub_failures, np.flatnonzero(inner))
    if bad.size:
        raise ContractError(f'u is not a subsolution inside G (node {bad[0]})', node=int(bad[0]))

    glued = GridFunction(v.domain, np.where(G, np.maximum(u.values, v.values), v.values), boundary=v.boundary)
    report = residual_report(glued, f, spec, stencil, residual_tol)
    if not report.subsolution:
        node = report.worst_sub_node
        raise ContractError(f'glued field is not a certified subsolution (worst node {node})', node=node)
    glued.certificate = report
    logger.info('Glued %d nodes of G, %d taken from u', int(G.sum()), int((G & (u.values > v.values)).sum()))
    return glued
