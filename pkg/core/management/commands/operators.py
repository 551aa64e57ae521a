"""
Management command tabulating comparability constants and structural properties.
"""

from core.engine import comparability_estimate, eig_hermitian, property_battery
from core.exports import write_table_csv, write_table_xlsx
from core.forms import OperatorsConfigForm
from core.management.runcommand import RunCommand

HEADER = [
    'operator', 'samples', 'empirical_C', 'analytic_C', 'consistent',
    'worst_A_spectrum', 'worst_P_spectrum', 'self_ratio_min', 'monge_ampere_ratio_min',
    'homogeneity_pass', 'ellipticity_pass', 'concavity_pass', 'concavity_checks', 'concavity_skipped',
    'comparability_pass', 'concavity_witness',
]


def _spectrum(H):
    return ';'.join(format(float(x), '.6g') for x in eig_hermitian(H).values)


class Command(RunCommand):
    help = 'Estimates comparability constants and checks homogeneity, ellipticity and concavity'
    command_name = 'operators'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--xlsx', action='store_true', help='Also write table.xlsx')

    def handle(self, *args, **options):
        run = self.load_config(options)
        form = self.bind(OperatorsConfigForm, run)
        data = form.cleaned_data

        rows = []
        with self.engine_errors():
            for spec in data['operators']:
                estimate = comparability_estimate(
                    spec, data['operators_samples'], data['seed'], positive_cone=data['operators_positive_cone'],
                )
                battery = property_battery(
                    spec, data['operators_samples'], data['seed'], positive_cone=data['operators_positive_cone'],
                )
                A, P = estimate.worst_pair
                rows.append([
                    spec.label, estimate.samples, estimate.empirical_C, estimate.analytic_C,
                    'yes' if estimate.consistent else 'no', _spectrum(A), _spectrum(P),
                    estimate.self_ratio_min, estimate.monge_ampere_ratio_min,
                    battery.homogeneity_pass, battery.ellipticity_pass, battery.concavity_pass,
                    battery.concavity_checks, battery.concavity_skipped, battery.comparability_pass, battery.concavity_witness,
                ])
                self.stdout.write(f'{spec.label}: empirical C = {estimate.empirical_C:.6g}')

        write_table_csv(run.out_dir / 'table.csv', HEADER, rows)
        if options.get('xlsx'):
            write_table_xlsx(run.out_dir / 'table.xlsx', HEADER, rows)
        self.success(f'Wrote {len(rows)} operator rows to {run.out_dir}')
