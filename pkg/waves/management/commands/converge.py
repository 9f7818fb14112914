import numpy as np

from waves.exceptions import ConfigError, RectangleError
from waves.services.rectangles import converge_many, iterate_difference, rectangle_for
from waves.services.reporting import write_csv

from ._base import IdewaveCommand


class Command(IdewaveCommand):
    help = 'Iterate the non-spatial recurrence from rectangle slice histories'
    name = 'converge'
    overrides = ('eps', 'n_steps', 'tol', 'n_histories', 's0')

    def run(self, config, model, kernels, options):
        n_steps = config.get('n_steps', 10_000)
        tol = config.get('tol', 1e-8)
        try:
            rect = rectangle_for(model, config.get('eps'))
        except RectangleError:
            if 'history' not in config.initial:
                raise
            rect = None

        if 'history' in config.initial:
            try:
                history = np.array(config.initial['history'], dtype=float)
                history = history.reshape(model.m, model.tau)
            except ValueError:
                raise ConfigError(
                    f"{config.path}: initial.history must hold {model.m} x {model.tau} numbers"
                )
            trajectory = iterate_difference(model, history, n_steps, rect=rect, tol=tol)
            if self.out_dir is not None:
                header = ['n'] + [f'u_{i + 1}' for i in range(model.m)]
                steps = np.arange(len(trajectory.states))
                write_csv(self.out_dir / 'trajectory.csv', header,
                          [steps] + list(trajectory.states.T))
            payload = {'trajectory': trajectory.to_dict(), 'steady': model.steady}
            return payload, trajectory.converged

        summary = converge_many(model, rect, n_histories=config.get('n_histories', 50),
                                s0=config.get('s0', 0.2), n_steps=n_steps, tol=tol,
                                seed=config.seed)
        return {'summary': summary.to_dict(), 'steady': model.steady}, summary.passed
