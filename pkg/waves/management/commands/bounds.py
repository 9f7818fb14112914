from waves.services.bounds import build_bounds, verify_bounds
from waves.services.dispersion import dispersion_for

from ._base import IdewaveCommand, wave_speed


class Command(IdewaveCommand):
    help = 'Build the explicit upper/lower solutions and verify their inequalities'
    name = 'bounds'
    overrides = ('c', 'h', 'mass_tol')

    def add_command_arguments(self, parser):
        parser.add_argument('--mode', choices=('extremal', 'sampled'), default='extremal')
        parser.add_argument('--q', type=float,
                            help='Replace the lower-solution coefficient Q')

    def run(self, config, model, kernels, options):
        c = wave_speed(config, model, kernels)
        disp = dispersion_for(model, kernels, c)
        pair = build_bounds(model, disp)
        if options.get('q') is not None:
            pair = pair.with_q(options['q'])
        report = verify_bounds(pair, model, kernels, c, h=config.get('h'),
                               mass_tol=config.get('mass_tol'), mode=options['mode'],
                               seed=config.seed)
        payload = {
            'dispersion': disp.to_dict(),
            'bounds': pair.to_dict(),
            'report': report.to_dict(),
        }
        return payload, report.passed
