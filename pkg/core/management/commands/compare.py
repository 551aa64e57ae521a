"""
Management command running the discrete comparison check on two fields.
"""

from django.core.management.base import CommandError

from core.engine import ContractError, GridFunction, comparison_check, parse
from core.exports import read_field_csv, write_report_json
from core.forms import SolveConfigForm
from core.management.runcommand import EXIT_CONFIG, RunCommand


class Command(RunCommand):
    help = 'Checks u <= v for a certified subsolution u and supersolution v'
    command_name = 'compare'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('u', help='Subsolution field CSV')
        parser.add_argument('v', help='Supersolution field CSV')
        parser.add_argument('--boundary-gap', dest='boundary_gap', type=float,
                            help='Claimed max(u - v) on the boundary; measured when omitted')
        parser.add_argument('--boundary-u', dest='boundary_u', help='Boundary datum of u (default boundary.phi)')
        parser.add_argument('--boundary-v', dest='boundary_v', help='Boundary datum of v (default boundary.phi)')

    def read_field(self, path, boundary, problem):
        datum = problem.phi if boundary is None else parse(boundary, problem.domain.n)
        return GridFunction(problem.domain, read_field_csv(path, problem.domain), boundary=datum)

    def handle(self, *args, **options):
        run = self.load_config(options)
        form = self.bind(SolveConfigForm, run)
        report_path = run.out_dir / 'report.json'

        with self.engine_errors():
            problem = form.build_problem()
            u = self.read_field(options['u'], options.get('boundary_u'), problem)
            v = self.read_field(options['v'], options.get('boundary_v'), problem)

        try:
            report = comparison_check(
                u, v, problem.f_values, problem.stencil,
                residual_tol=problem.residual_tol, boundary_gap=options.get('boundary_gap'),
            )
        except ContractError as exc:
            write_report_json(report_path, {'verdict': 'uncertified', 'message': str(exc), 'node': exc.node})
            raise CommandError(f'Certification failed: {exc}', returncode=EXIT_CONFIG)

        write_report_json(report_path, report.summary())
        if not report.passed:
            raise CommandError(
                f'Comparison failed: violation {report.interior_violation:.3e} exceeds '
                f'boundary gap {report.boundary_gap:.3e} at node {report.worst_node}',
                returncode=EXIT_CONFIG,
            )
        self.success(f'Comparison passed (violation {report.interior_violation:.3e})')
