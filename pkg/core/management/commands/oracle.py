"""
Management command emitting exact reference fields.
"""

import numpy as np
from django.core.management.base import CommandError

from core.engine import evaluate_at, parse, quadratic_solution, radial_solution
from core.exports import write_report_json, write_solution_csv
from core.forms import OracleConfigForm
from core.management.runcommand import EXIT_FLAGGED_ORACLE, RunCommand


class Command(RunCommand):
    help = 'Samples a radial or constant-Hessian exact solution on the configured grid'
    command_name = 'oracle'

    def handle(self, *args, **options):
        run = self.load_config(options)
        form = self.bind(OracleConfigForm, run)
        data = form.cleaned_data

        with self.engine_errors():
            domain = form.build_domain()
            coords = domain.coords
            if data['oracle_kind'] == 'radial':
                radial = radial_solution(data['oracle_f'], data['oracle_R'], data['n'])
                t = np.sum(coords * coords, axis=1)
                values = radial.u(coords)
                residual = radial.lambda1_at(t) - evaluate_at(parse(data['oracle_f'], data['n']), coords)
                meta = {
                    'oracle_kind': 'radial',
                    'f': radial.f_text,
                    'R': radial.R,
                    'admissible': radial.admissible,
                    'max_chi2': float(radial.ddchi.max()),
                    'min_chi1': float(radial.dchi.min()),
                }
                flagged = not radial.admissible
            else:
                expr, f_value = quadratic_solution(data['oracle_H'], data['operator'])
                values = evaluate_at(expr, coords)
                residual = np.zeros(domain.size)
                H = data['oracle_H'].entries
                meta = {
                    'oracle_kind': 'quadratic',
                    'operator': data['operator'].label,
                    'f_value': f_value,
                    'u': str(expr),
                    'hessian_real': H.real.ravel(),
                    'hessian_imag': H.imag.ravel(),
                }
                flagged = False

        meta.update({'n': domain.n, 'h': domain.h, 'nodes': domain.size, 'flagged': flagged})
        write_solution_csv(run.out_dir / 'field.csv', domain, values, residual, echo=run.echo())
        write_report_json(run.out_dir / 'oracle.json', meta)

        if flagged:
            raise CommandError('Radial profile is not admissible (chi\'\' > 0); field written for diagnostics',
                               returncode=EXIT_FLAGGED_ORACLE)
        self.success(f'Wrote {meta["oracle_kind"]} oracle field on {domain.size} nodes')
