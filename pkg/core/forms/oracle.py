"""
Form for exact oracle fields.
"""

from django import forms

from core.engine import ContractError, HermitianMatrix, OperatorKind, OperatorSpec

from .problem import GridConfigForm, parse_floats

ORACLE_CHOICES = [
    ('radial', 'Radial profile'),
    ('quadratic', 'Constant-Hessian quadratic'),
]


def parse_hessian(text):
    """'a,b,...' for a diagonal matrix, or rows separated by '|' ('2,1|1,2'); entries may be complex."""
    rows = [row for row in text.split('|') if row.strip()]
    try:
        entries = [[complex(x.strip().replace(' ', '')) for x in row.split(',') if x.strip()] for row in rows]
    except ValueError:
        raise forms.ValidationError(f'oracle.H must list numbers, got {text!r}')
    try:
        if len(entries) == 1:
            return HermitianMatrix.diag(*entries[0])
        return HermitianMatrix(entries)
    except (ContractError, ValueError) as exc:
        raise forms.ValidationError(f'oracle.H: {exc}')


class OracleConfigForm(GridConfigForm):
    """Radial or quadratic exact field sampled on the configured grid."""

    oracle_kind = forms.ChoiceField(choices=ORACLE_CHOICES)
    oracle_f = forms.CharField(required=False)
    oracle_R = forms.FloatField(required=False)
    oracle_H = forms.CharField(required=False)
    operator_kind = forms.ChoiceField(choices=OperatorKind.choices, required=False)
    operator_k = forms.IntegerField(required=False, min_value=1)
    operator_a = forms.CharField(required=False)
    operator_s = forms.FloatField(required=False, min_value=0.0, max_value=1.0)

    def clean_oracle_H(self):
        text = self.cleaned_data.get('oracle_H')
        return parse_hessian(text) if text else None

    def clean_operator_a(self):
        text = self.cleaned_data.get('operator_a')
        return tuple(parse_floats(text, 'operator.a')) if text else None

    def clean(self):
        cleaned = super().clean()
        kind = cleaned.get('oracle_kind')
        if cleaned.get('oracle_R') is None:
            cleaned['oracle_R'] = cleaned.get('domain_R') or 1.0
        if kind == 'radial' and not cleaned.get('oracle_f'):
            self.add_error('oracle_f', 'A radial oracle needs a profile f(t).')
        if kind == 'quadratic':
            H = cleaned.get('oracle_H')
            n = cleaned.get('n')
            if H is None and 'oracle_H' not in self.errors:
                self.add_error('oracle_H', 'A quadratic oracle needs a Hessian.')
            elif H is not None and n is not None and H.n != n:
                self.add_error('oracle_H', f'Hessian dimension {H.n} does not match n = {n}.')
            elif n is not None and not self.errors:
                try:
                    cleaned['operator'] = OperatorSpec(
                        cleaned.get('operator_kind') or OperatorKind.LAMBDA1, n,
                        k=cleaned.get('operator_k'), a=cleaned.get('operator_a'), s=cleaned.get('operator_s'),
                    )
                except ContractError as exc:
                    self.add_error('operator_kind', str(exc))
        return cleaned
