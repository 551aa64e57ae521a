"""
Forms validating grid, domain and problem configuration.
"""

from django import forms
from django.conf import settings

from core.engine import (
    ContractError, EngineError, OperatorKind, OperatorSpec, ProblemSpec, ball_preset,
    build_preset_domain, custom_preset, ellipsoid_preset, parse, polydisc_preset, two_balls_preset,
)
from core.engine.solver import SweepOrder

PRESET_CHOICES = [
    ('ball', 'Ball'),
    ('ellipsoid', 'Ellipsoid'),
    ('two_balls', 'Intersection of two balls'),
    ('polydisc', 'Polydisc'),
    ('custom', 'Custom level set'),
]


def parse_floats(text, label):
    items = [x for x in text.replace(';', ',').split(',') if x.strip()]
    try:
        return [float(x) for x in items]
    except ValueError:
        raise forms.ValidationError(f'{label} must be a list of numbers, got {text!r}')


def parse_box(text):
    """'lo,hi' for every axis, or 'lo,hi; lo,hi; ...' per axis."""
    pairs = []
    for part in text.split(';'):
        if not part.strip():
            continue
        numbers = parse_floats(part, 'grid.box')
        if len(numbers) != 2 or numbers[0] >= numbers[1]:
            raise forms.ValidationError(f"grid.box entries must be 'lo,hi' with lo < hi, got {part.strip()!r}")
        pairs.append(tuple(numbers))
    if not pairs:
        raise forms.ValidationError('grid.box is empty')
    return pairs


class ExpressionField(forms.CharField):
    """Expression text; parsed against the dimension in the form's clean()."""


class GridConfigForm(forms.Form):
    """Dimension, lattice and domain keys shared by solve, verify, compare and oracle."""

    n = forms.IntegerField(min_value=1, max_value=2)
    grid_h = forms.FloatField()
    grid_box = forms.CharField(required=False)
    domain_preset = forms.ChoiceField(choices=PRESET_CHOICES, required=False)
    domain_R = forms.FloatField(required=False)
    domain_weights = forms.CharField(required=False)
    domain_R2 = forms.FloatField(required=False)
    domain_offset = forms.FloatField(required=False)
    domain_level = ExpressionField(required=False)
    seed = forms.IntegerField(required=False)

    expression_fields = ('domain_level',)

    def clean_grid_h(self):
        h = self.cleaned_data.get('grid_h')
        if h is not None and h <= 0:
            raise forms.ValidationError('Grid spacing must be greater than zero.')
        return h

    def clean_grid_box(self):
        text = self.cleaned_data.get('grid_box')
        return parse_box(text) if text else None

    def clean_domain_weights(self):
        text = self.cleaned_data.get('domain_weights')
        return parse_floats(text, 'domain.weights') if text else None

    def clean(self):
        cleaned = super().clean()
        n = cleaned.get('n')
        if n is None:
            return cleaned
        for name in self.expression_fields:
            text = cleaned.get(name)
            if text:
                try:
                    cleaned[name] = parse(text, n)
                except EngineError as exc:
                    self.add_error(name, str(exc))
            else:
                cleaned[name] = None
        if not cleaned.get('domain_preset'):
            cleaned['domain_preset'] = 'custom' if cleaned.get('domain_level') else 'ball'
        if cleaned['domain_preset'] == 'custom' and not self.data.get('domain_level'):
            self.add_error('domain_level', 'A custom domain needs a level expression.')
        if cleaned.get('domain_R') is None:
            cleaned['domain_R'] = 1.0
        return cleaned

    def build_preset(self):
        data = self.cleaned_data
        n, R = data['n'], data['domain_R']
        name = data['domain_preset']
        if name == 'ball':
            return ball_preset(n, R)
        if name == 'ellipsoid':
            return ellipsoid_preset(n, data['domain_weights'] or [1.0] * n)
        if name == 'two_balls':
            R2 = data['domain_R2'] if data['domain_R2'] is not None else R
            offset = data['domain_offset'] if data['domain_offset'] is not None else 0.5 * R
            return two_balls_preset(n, R, R2, offset)
        if name == 'polydisc':
            return polydisc_preset(n, R)
        if not data['grid_box']:
            raise ContractError('a custom domain needs grid.box')
        return custom_preset(n, self.data['domain_level'], radius=R)

    def build_domain(self):
        return build_preset_domain(self.build_preset(), self.cleaned_data['grid_h'], self.cleaned_data['grid_box'])


class SolveConfigForm(GridConfigForm):
    """Problem definition for solve, verify and compare."""

    rhs_f = ExpressionField()
    boundary_phi = ExpressionField()
    boundary_phi_tilde = ExpressionField(required=False)
    operator_kind = forms.ChoiceField(choices=OperatorKind.choices, required=False)
    operator_k = forms.IntegerField(required=False, min_value=1)
    operator_a = forms.CharField(required=False)
    operator_s = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    directions_W = forms.IntegerField(required=False, min_value=1)
    solver_tol = forms.FloatField(required=False)
    solver_max_sweeps = forms.IntegerField(required=False, min_value=1)
    solver_max_iterations = forms.IntegerField(required=False, min_value=1)
    solver_order = forms.ChoiceField(
        choices=[(SweepOrder.SYMMETRIC, 'Forward/backward'), (SweepOrder.COLORED, 'Colored')],
        required=False,
    )
    solver_margin = forms.FloatField(required=False, min_value=0.0)
    solver_residual_tol = forms.FloatField(required=False)
    solver_initial = ExpressionField(required=False)
    solver_exact = ExpressionField(required=False)
    verify_tol = forms.FloatField(required=False)
    verify_fit_cap = forms.FloatField(required=False)

    expression_fields = (
        'domain_level', 'rhs_f', 'boundary_phi', 'boundary_phi_tilde', 'solver_initial', 'solver_exact',
    )

    def clean_operator_a(self):
        text = self.cleaned_data.get('operator_a')
        return tuple(parse_floats(text, 'operator.a')) if text else None

    def clean(self):
        cleaned = super().clean()
        defaults = settings.CXLAMBDA
        fallbacks = {
            'operator_kind': OperatorKind.LAMBDA1,
            'directions_W': defaults['DIRECTION_WIDTH'],
            'solver_tol': defaults['SOLVER_TOL'],
            'solver_max_sweeps': defaults['MAX_SWEEPS'],
            'solver_max_iterations': defaults['GENERAL_MAX_ITERATIONS'],
            'solver_order': SweepOrder.SYMMETRIC,
            'solver_margin': defaults['BARRIER_MARGIN'],
            'solver_residual_tol': defaults['RESIDUAL_TOL'],
            'verify_tol': defaults['JET_TOL'],
            'verify_fit_cap': defaults['JET_FIT_CAP'],
        }
        for name, value in fallbacks.items():
            if cleaned.get(name) in (None, ''):
                cleaned[name] = value
        for name in ('solver_tol', 'solver_residual_tol', 'verify_tol'):
            if cleaned[name] <= 0:
                self.add_error(name, 'Tolerance must be greater than zero.')
        n = cleaned.get('n')
        if n is not None and not self.errors:
            try:
                cleaned['operator'] = OperatorSpec(
                    cleaned['operator_kind'], n, k=cleaned.get('operator_k'),
                    a=cleaned.get('operator_a'), s=cleaned.get('operator_s'),
                )
            except ContractError as exc:
                self.add_error('operator_kind', str(exc))
        return cleaned

    def build_problem(self, domain=None):
        data = self.cleaned_data
        return ProblemSpec(
            domain=domain or self.build_domain(),
            f=data['rhs_f'],
            phi=data['boundary_phi'],
            operator=data['operator'],
            phi_tilde=data['boundary_phi_tilde'],
            width=data['directions_W'],
            tol=data['solver_tol'],
            max_sweeps=data['solver_max_sweeps'],
            residual_tol=data['solver_residual_tol'],
            margin=data['solver_margin'],
            order=data['solver_order'],
            max_iterations=data['solver_max_iterations'],
            initial=data['solver_initial'],
        )
