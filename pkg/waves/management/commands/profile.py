from waves.exceptions import ConfigError, RectangleError
from waves.services.rectangles import profile_tail_check, rectangle_for
from waves.services.reporting import write_csv
from waves.services.wave_operator import (
    near_critical_profile,
    positivity_report,
    refinement_residual,
    solve_profile,
)

from ._base import IdewaveCommand, wave_speed


def parse_eps_sequence(text):
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ConfigError(f"--near-critical expects comma-separated numbers, got '{text}'")


class Command(IdewaveCommand):
    help = 'Solve for a traveling wave profile by clamped fixed-point iteration'
    name = 'profile'
    overrides = ('c', 'h', 'span', 'tol', 'max_iter')

    def add_command_arguments(self, parser):
        parser.add_argument('--start', choices=('lower', 'upper'), default='lower')
        parser.add_argument('--near-critical', dest='near_critical', metavar='EPS,...',
                            help='Profiles at cmin + eps for a decreasing eps list')

    def write_profile(self, profile):
        if self.out_dir is None:
            return
        header = ['xi'] + [f'phi_{i + 1}' for i in range(profile.m)]
        write_csv(self.out_dir / 'profile.csv', header,
                  [profile.grid.nodes] + list(profile.values))

    def run(self, config, model, kernels, options):
        tol = config.get('tol', 1e-10)
        max_iter = config.get('max_iter', 10_000)

        if options.get('near_critical'):
            eps_sequence = parse_eps_sequence(options['near_critical'])
            result = near_critical_profile(model, kernels, eps_sequence, tol=tol,
                                           max_iter=max_iter, h=config.get('h'))
            if result.profiles:
                self.write_profile(result.profile)
            return {'near_critical': result.to_dict()}, result.converged

        c = wave_speed(config, model, kernels)
        solution = solve_profile(model, kernels, c, tol=tol, max_iter=max_iter,
                                 h=config.get('h'), span=config.get('span'),
                                 start=options['start'])
        self.write_profile(solution.profile)
        payload = {
            'dispersion': solution.disp.to_dict(),
            'bounds': solution.pair.to_dict(),
            'profile': solution.profile.to_dict(),
            'report': solution.report.to_dict(),
            'positivity': positivity_report(solution.profile, model.bound_caps),
        }
        if solution.report.converged:
            payload['refinement_residual'] = refinement_residual(
                solution.profile, model, kernels, solution.disp)
        if solution.report.converged and model.rectangle_ready:
            try:
                rect = rectangle_for(model)
            except RectangleError:
                rect = None
            if rect is not None:
                payload['tail'] = profile_tail_check(solution.profile, rect, model)
        return payload, solution.report.converged
