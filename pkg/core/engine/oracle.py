"""
Independent reference solutions and a quadratic-fit viscosity check.

Radial reduction: for u(z) = chi(|z|^2) the complex Hessian is

    chi'(t) I + chi''(t) z z*,

so its eigenvalues are chi' (multiplicity n - 1) and chi' + t chi'' = (t chi')'.
When chi'' <= 0 the least one is (t chi')', and Lambda_1 = f reduces to
t chi'(t) = integral of f over [0, t].
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, OutsideConeError
from .exprparse import parse
from .hermitian import Spectrum, SymmetricForm, batch_spectra, q11_batch
from .operators import evaluate

logger = logging.getLogger(__name__)

RADIAL_PANELS = 10_000
ADMISSIBLE_SLACK = 1e-12
FIT_RADIUS = 2


# ==============
# Radial profile
# ==============

def _cumulative_simpson(values, mids, step):
    """Integrals from 0 to every node, Simpson on each panel with its midpoint."""
    panels = step / 6.0 * (values[:-1] + 4.0 * mids + values[1:])
    return np.concatenate([[0.0], np.cumsum(panels)])


@dataclass(frozen=True)
class RadialSolution:
    R: float
    n: int
    f_text: str
    t: np.ndarray
    chi: np.ndarray
    dchi: np.ndarray
    ddchi: np.ndarray
    F: np.ndarray
    admissible: bool

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        step = self.t[1] - self.t[0]
        i = np.clip((t / step).astype(np.int64), 0, self.t.size - 2)
        return t, i, step

    def chi_at(self, t):
        """Cubic Hermite interpolation of chi through (chi, chi')."""
        t, i, step = self._locate(t)
        s = (t - self.t[i]) / step
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return (h00 * self.chi[i] + h10 * step * self.dchi[i]
                + h01 * self.chi[i + 1] + h11 * step * self.dchi[i + 1])

    def _linear(self, samples, t):
        return np.interp(np.asarray(t, dtype=float), self.t, samples)

    def dchi_at(self, t):
        return self._linear(self.dchi, t)

    def lambda1_at(self, t):
        """Least eigenvalue of the complex Hessian of chi(|z|^2) at |z|^2 = t."""
        dchi = self.dchi_at(t)
        radial = dchi + np.asarray(t) * self._linear(self.ddchi, t)
        if self.n == 1:
            return radial
        return np.minimum(dchi, radial)

    def u(self, coords):
        coords = np.asarray(coords, dtype=float)
        return self.chi_at(np.sum(coords * coords, axis=-1))


def radial_solution(f_expr, R, n, panels=RADIAL_PANELS):
    """chi with t chi'(t) = int_0^t f, chi(0) = 0, on t in [0, R^2]."""
    if R <= 0:
        raise ContractError(f'radius must be positive, got {R}')
    if panels < 2:
        raise ContractError('at least two panels are needed')
    if isinstance(f_expr, str):
        f_expr = parse(f_expr, n)
    unknown = f_expr.variables() - {'t', 'r'}
    if unknown:
        raise ContractError(f"radial profile may only use t and r, found {', '.join(sorted(unknown))}")

    T = float(R) ** 2
    step = T / panels
    fine = np.linspace(0.0, T, 2 * panels + 1)
    profile = f_expr.evaluate({'t': fine, 'r': np.sqrt(fine)})
    f_fine = np.broadcast_to(np.asarray(profile, dtype=float), fine.shape).copy()
    if np.any(f_fine <= 0):
        raise ContractError(f'radial profile must be positive on [0, {T:g}]')
    df_fine = np.gradient(f_fine, fine, edge_order=2)

    t = fine[0::2]
    f_nodes, f_mids = f_fine[0::2], f_fine[1::2]
    F = _cumulative_simpson(f_nodes, f_mids, step)
    # K(t) = int_0^t s f'(s) ds = t f(t) - F(t)
    sdf = fine * df_fine
    K = _cumulative_simpson(sdf[0::2], sdf[1::2], step)

    dchi = np.empty_like(t)
    ddchi = np.empty_like(t)
    dchi[0] = f_nodes[0]
    ddchi[0] = 0.5 * df_fine[0]
    dchi[1:] = F[1:] / t[1:]
    ddchi[1:] = K[1:] / t[1:] ** 2

    dchi_mids = np.interp(fine[1::2], t, dchi)
    chi = _cumulative_simpson(dchi, dchi_mids, step)

    admissible = bool(ddchi.max() <= ADMISSIBLE_SLACK and dchi.min() >= -ADMISSIBLE_SLACK)
    text = str(f_expr)
    if not admissible:
        logger.warning('Radial profile %s is not admissible: max chi\'\' = %.3e', text, ddchi.max())
    return RadialSolution(R=float(R), n=n, f_text=text, t=t, chi=chi, dchi=dchi,
                          ddchi=ddchi, F=F, admissible=admissible)


# ============
# Closed forms
# ============

def brute_eig2(H):
    """Eigenvalues of a 2 x 2 Hermitian matrix in closed form."""
    if H.n != 2:
        raise ContractError(f'brute_eig2 needs a 2 x 2 matrix, got n = {H.n}')
    a = H.entries[0, 0].real
    c = H.entries[1, 1].real
    b = H.entries[0, 1]
    m = 0.5 * (a + c)
    d = math.sqrt(0.25 * (a - c) ** 2 + abs(b) ** 2)
    return Spectrum(values=np.array([m - d, m + d]))


def quadratic_solution(H0, spec):
    """u = sum_jk H0[j][k] z_j conj(z_k) and f = G(H0)."""
    try:
        f_value = evaluate(spec, H0)
    except OutsideConeError as exc:
        raise ContractError(f'Hessian outside the {spec.label} cone: {exc}')
    terms = []
    for j in range(H0.n):
        diagonal = float(H0.entries[j, j].real)
        terms.append(f'{diagonal!r}*(x{j + 1}^2 + y{j + 1}^2)')
        for k in range(j + 1, H0.n):
            re, im = float(H0.entries[j, k].real), float(H0.entries[j, k].imag)
            xj, yj, xk, yk = f'x{j + 1}', f'y{j + 1}', f'x{k + 1}', f'y{k + 1}'
            terms.append(f'2*{re!r}*({xj}*{xk} + {yj}*{yk})')
            terms.append(f'2*{im!r}*({xj}*{yk} - {yj}*{xk})')
    return parse(' + '.join(terms), H0.n), f_value


# ==================
# Viscosity checking
# ==================

@dataclass(frozen=True)
class JetProbe:
    node: int
    gradient: np.ndarray
    form: SymmetricForm
    residual: float
    side: str
    lambda1: float
    f_value: float


@dataclass(frozen=True)
class ViscosityReport:
    tol: float
    probed: int
    passed: int
    excluded: int
    skipped: int
    failures: np.ndarray
    probes: tuple

    @property
    def pass_rate(self):
        return self.passed / self.probed if self.probed else float('nan')

    def summary(self):
        return {
            'jet_tol': self.tol,
            'jet_probed': self.probed,
            'jet_passed': self.passed,
            'jet_excluded': self.excluded,
            'jet_skipped': self.skipped,
            'jet_pass_rate': self.pass_rate,
            'jet_failures': self.failures.tolist(),
        }


def _fit_design(m):
    """Offsets of the radius-2 index ball and the quadratic design matrix."""
    span = range(-FIT_RADIUS, FIT_RADIUS + 1)
    offsets = np.array([o for o in np.ndindex(*(len(span),) * m)]) - FIT_RADIUS
    offsets = offsets[(offsets ** 2).sum(axis=1) <= FIT_RADIUS ** 2]
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    columns = [np.ones(len(offsets))] + [offsets[:, a] for a in range(m)]
    columns += [offsets[:, a] * offsets[:, b] for a, b in pairs]
    return offsets, np.stack(columns, axis=1).astype(float), pairs


def verify_viscosity(u, f, tol, fit_cap=1e3):
    """Fit quadratics on radius-2h node balls and test Lambda_1 of their (1,1)-parts against f."""
    domain = u.domain
    m = 2 * domain.n
    h = domain.h
    f_values = f.values if hasattr(f, 'values') else np.broadcast_to(np.asarray(f, dtype=float), (domain.size,))

    offsets, design, pairs = _fit_design(m)
    neighbors = domain.lookup((domain.multi[:, None, :] + offsets[None, :, :]).reshape(-1, m))
    neighbors = neighbors.reshape(domain.size, len(offsets))
    eligible = np.all(neighbors >= 0, axis=1)
    nodes = np.flatnonzero(eligible)
    skipped = int(domain.size - nodes.size)
    if not nodes.size:
        return ViscosityReport(tol=tol, probed=0, passed=0, excluded=0, skipped=skipped,
                               failures=np.empty(0, dtype=np.int64), probes=())

    samples = u.values[neighbors[nodes]]
    coefficients = samples @ np.linalg.pinv(design).T
    fitted = coefficients @ design.T
    scale = np.sqrt(np.mean((samples - fitted) ** 2, axis=1)) / (h * h)

    Q = np.zeros((nodes.size, m, m))
    for column, (a, b) in enumerate(pairs, start=1 + m):
        if a == b:
            Q[:, a, a] = 2.0 * coefficients[:, column]
        else:
            Q[:, a, b] = Q[:, b, a] = coefficients[:, column]
    Q /= h * h
    lam = batch_spectra(q11_batch(Q))[:, 0]

    kept = scale <= fit_cap
    band = tol * (1.0 + scale)
    target = f_values[nodes]
    ok = np.abs(lam - target) <= band
    failing = nodes[kept & ~ok]
    probes = tuple(
        JetProbe(
            node=int(nodes[i]), gradient=coefficients[i, 1:1 + m] / h, form=SymmetricForm(Q[i]),
            residual=float(scale[i]), side='above' if lam[i] > target[i] else 'below',
            lambda1=float(lam[i]), f_value=float(target[i]),
        )
        for i in np.flatnonzero(kept & ~ok)
    )
    report = ViscosityReport(
        tol=float(tol), probed=int(kept.sum()), passed=int((kept & ok).sum()),
        excluded=int((~kept).sum()), skipped=skipped, failures=failing, probes=probes,
    )
    logger.info('Jet probes: %d/%d passed (%d excluded, %d skipped)',
                report.passed, report.probed, report.excluded, report.skipped)
    return report
