"""
Form for the operator comparability table.
"""

from django import forms
from django.conf import settings

from core.engine import ContractError, OperatorSpec

DEFAULT_OPERATORS = 'lambda1, monge_ampere'


class OperatorsConfigForm(forms.Form):
    """Operator list, sample count and sampling cone."""

    n = forms.IntegerField(min_value=1, max_value=4)
    operators_list = forms.CharField(required=False)
    operators_samples = forms.IntegerField(required=False, min_value=1)
    operators_positive_cone = forms.BooleanField(required=False)
    seed = forms.IntegerField(required=False)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get('operators_samples') is None:
            cleaned['operators_samples'] = settings.CXLAMBDA['OPERATOR_SAMPLES']
        if cleaned.get('seed') is None:
            cleaned['seed'] = 0
        n = cleaned.get('n')
        if n is None:
            return cleaned
        specs = []
        for token in (cleaned.get('operators_list') or DEFAULT_OPERATORS).split(','):
            if not token.strip():
                continue
            try:
                specs.append(OperatorSpec.from_token(token, n))
            except (ContractError, ValueError) as exc:
                self.add_error('operators_list', f'{token.strip()}: {exc}')
        if not specs and not self.errors:
            self.add_error('operators_list', 'No operators given.')
        cleaned['operators'] = specs
        return cleaned
