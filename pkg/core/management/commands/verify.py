"""
Management command checking a field against the discrete equation.
"""

from core.engine import GridFunction, OperatorKind, residual_report, verify_viscosity
from core.exports import read_field_csv, write_report_json
from core.forms import SolveConfigForm
from core.management.runcommand import RunCommand


class Command(RunCommand):
    help = 'Reports residuals, sub/supersolution verdicts and jet probes for a field CSV'
    command_name = 'verify'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('field', help='Field CSV on the configured grid')

    def handle(self, *args, **options):
        run = self.load_config(options)
        form = self.bind(SolveConfigForm, run)

        with self.engine_errors():
            problem = form.build_problem()
            values = read_field_csv(options['field'], problem.domain)
            u = GridFunction(problem.domain, values, boundary=problem.phi)
            residual = residual_report(u, problem.f_values, problem.operator, problem.stencil, problem.residual_tol)
            data = residual.summary()
            data['subsolution_failure_nodes'] = residual.sub_failures
            data['supersolution_failure_nodes'] = residual.super_failures
            if problem.operator.kind == OperatorKind.LAMBDA1:
                jets = verify_viscosity(
                    u, problem.f_values, form.cleaned_data['verify_tol'],
                    fit_cap=form.cleaned_data['verify_fit_cap'],
                )
                data.update(jets.summary())

        data.update({'field': str(options['field']), 'nodes': problem.domain.size, 'seed': run.seed})
        write_report_json(run.out_dir / 'report.json', data)
        self.success(
            f'subsolution: {residual.subsolution}, supersolution: {residual.supersolution} '
            f'(max residual {residual.max_stencil:.3e})'
        )
