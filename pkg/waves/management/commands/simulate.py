import numpy as np

from waves.services.reporting import write_csv
from waves.services.spatial_sim import BOUNDARIES, DEFAULT_CELLS, METHODS, simulate

from ._base import IdewaveCommand


class Command(IdewaveCommand):
    help = 'Simulate the spatial recurrence and measure front speeds'
    name = 'simulate'
    overrides = ('n_steps', 'cells', 'level')

    def add_command_arguments(self, parser):
        parser.add_argument('--method', choices=METHODS, default='direct')
        parser.add_argument('--boundary', choices=BOUNDARIES, default='zero_pad')

    def run(self, config, model, kernels, options):
        n_steps = config.get('n_steps', 200)
        result = simulate(
            model, kernels,
            n_steps=n_steps,
            cells=config.get('cells', DEFAULT_CELLS),
            support=config.initial.get('support', 5.0),
            amplitude=config.initial.get('amplitude'),
            track_level=config.get('level'),
            boundary=options['boundary'],
            method=options['method'],
        )
        if self.out_dir is not None:
            generations = np.arange(n_steps + 1)
            fronts = []
            for trace in result.traces:
                column = np.full(n_steps + 1, np.nan)
                column[trace.generations] = trace.positions
                fronts.append(column)
            header = ['n'] + [f'x_front_{i + 1}' for i in range(model.m)]
            write_csv(self.out_dir / 'front.csv', header, [generations] + fronts)
            state = result.state
            header = ['x'] + [f'u_{i + 1}' for i in range(model.m)]
            write_csv(self.out_dir / 'final_state.csv', header,
                      [state.x] + list(state.current))
        return result.to_dict(), True
