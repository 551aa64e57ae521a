"""
Run configuration: flat ``key = value`` files plus ``--set`` overrides.
"""

from dataclasses import dataclass, field
from pathlib import Path

from django import forms

KEYS = (
    'n',
    'grid.h', 'grid.box',
    'domain.preset', 'domain.R', 'domain.weights', 'domain.R2', 'domain.offset', 'domain.level',
    'rhs.f',
    'boundary.phi', 'boundary.phi_tilde',
    'operator.kind', 'operator.k', 'operator.a', 'operator.s',
    'directions.W',
    'solver.tol', 'solver.max_sweeps', 'solver.order', 'solver.margin', 'solver.residual_tol',
    'solver.initial', 'solver.exact', 'solver.max_iterations',
    'verify.tol', 'verify.fit_cap',
    'operators.list', 'operators.samples', 'operators.positive_cone',
    'oracle.kind', 'oracle.f', 'oracle.R', 'oracle.H',
    'seed',
)


def parse_line(line, lineno=None):
    """(key, value) for a ``key = value`` line, None for blanks and comments."""
    text = line.split('#', 1)[0].strip()
    if not text:
        return None
    key, sep, value = text.partition('=')
    where = f' (line {lineno})' if lineno is not None else ''
    if not sep:
        raise forms.ValidationError(f"expected 'key = value'{where}, got '{line.strip()}'")
    key = key.strip()
    if key not in KEYS:
        raise forms.ValidationError(f"unknown configuration key '{key}'{where}")
    return key, value.strip()


def read_config_file(path):
    values = {}
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise forms.ValidationError(f'cannot read config file {path}: {exc.strerror}')
    for lineno, line in enumerate(text.splitlines(), 1):
        parsed = parse_line(line, lineno)
        if parsed:
            values[parsed[0]] = parsed[1]
    return values


@dataclass
class RunConfig:
    command: str
    path: str = None
    overrides: tuple = ()
    out_dir: Path = Path('.')
    seed: int = None
    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, command, path=None, overrides=(), out_dir='.', seed=None):
        values = read_config_file(path) if path else {}
        for item in overrides:
            parsed = parse_line(item)
            if parsed is None:
                raise forms.ValidationError(f"empty override '{item}'")
            values[parsed[0]] = parsed[1]
        if seed is not None:
            values['seed'] = str(seed)
        return cls(command=command, path=path, overrides=tuple(overrides), out_dir=Path(out_dir),
                   seed=int(values['seed']) if values.get('seed') else None, values=values)

    def form_data(self):
        """Values keyed by form field name ('grid.h' -> 'grid_h')."""
        return {key.replace('.', '_'): value for key, value in self.values.items()}

    def echo(self):
        return [f'{key} = {self.values[key]}' for key in KEYS if key in self.values]


def format_errors(form):
    """'grid.h: This field is required.' style lines for a bound form."""
    lines = []
    for name, errors in form.errors.items():
        label = name.replace('_', '.', 1) if name != '__all__' else 'config'
        for error in errors:
            lines.append(f'{label}: {error}')
    return '\n'.join(lines)
