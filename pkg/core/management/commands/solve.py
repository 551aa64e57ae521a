"""
Management command solving the Dirichlet problem on a grid.

`--field barrier` and `--field harmonic` write the certified lower and upper
bounds of the Perron iteration instead of solving.
"""

import numpy as np
from django.core.management.base import CommandError

from core.engine import barrier_subsolution, evaluate_at, harmonic_supersolution, solve
from core.exports import write_report_json, write_solution_csv
from core.forms import SolveConfigForm
from core.management.runcommand import EXIT_NOT_CONVERGED, RunCommand

BOUND_FIELDS = {
    'barrier': barrier_subsolution,
    'harmonic': harmonic_supersolution,
}


class Command(RunCommand):
    help = 'Solves G(D^2_C u) = f in the configured domain with u = phi on the boundary'
    command_name = 'solve'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--field', dest='field', choices=['solution', *BOUND_FIELDS], default='solution',
            help='Write the solution (default), the barrier subsolution or the harmonic supersolution',
        )

    def problem_summary(self, problem, run):
        return {
            'n': problem.domain.n,
            'h': problem.domain.h,
            'nodes': problem.domain.size,
            'directions': len(problem.directions),
            'domain': problem.domain.preset.name,
            'b_regular': problem.domain.preset.b_regular,
            'slaved_nodes': int(problem.stencil.slaved.sum()),
            'seed': run.seed,
        }

    def write_bound(self, name, problem, run):
        with self.engine_errors():
            bound = BOUND_FIELDS[name](problem)
        certificate = bound.certificate
        data = {'field': name, **certificate.summary(), **self.problem_summary(problem, run)}
        write_solution_csv(run.out_dir / f'{name}.csv', problem.domain, bound.values,
                           certificate.stencil_residual, echo=run.echo())
        write_report_json(run.out_dir / 'report.json', data)
        self.success(f'Wrote certified {name} field on {problem.domain.size} nodes')

    def handle(self, *args, **options):
        run = self.load_config(options)
        form = self.bind(SolveConfigForm, run)

        with self.engine_errors():
            problem = form.build_problem()
        if options['field'] in BOUND_FIELDS:
            return self.write_bound(options['field'], problem, run)

        with self.engine_errors():
            report = solve(problem)

        solution = report.solution
        data = report.summary()
        data.update(self.problem_summary(problem, run))
        exact = form.cleaned_data['solver_exact']
        if exact is not None:
            data['linf_error'] = float(np.abs(solution.values - evaluate_at(exact, problem.domain.coords)).max())

        write_solution_csv(run.out_dir / 'solution.csv', problem.domain, solution.values,
                           report.residual.stencil_residual, echo=run.echo())
        write_report_json(run.out_dir / 'report.json', data)

        if not report.converged:
            raise CommandError(
                f'{report.method} did not converge after {report.sweeps} iterations; results written to {run.out_dir}',
                returncode=EXIT_NOT_CONVERGED,
            )
        self.success(
            f'Converged in {report.sweeps} {"sweeps" if report.method.startswith("perron") else "iterations"} '
            f'(max residual {report.residual.max_stencil:.3e})'
        )
