from waves.services.population import band_refinement, second_iterate_gap
from waves.services.rectangles import check_rectangle_shape, rectangle_for, verify_rectangle

from ._base import IdewaveCommand


class Command(IdewaveCommand):
    help = 'Build a contracting rectangle and verify its strict inclusion'
    name = 'rectangle'
    overrides = ('eps',)

    def add_command_arguments(self, parser):
        parser.add_argument('--n-s', dest='n_s', type=int, default=99,
                            help='Interior s values to check')
        parser.add_argument('--n-box', dest='n_box', type=int, default=100,
                            help='Random states per s value')

    def run(self, config, model, kernels, options):
        rect = rectangle_for(model, config.get('eps'))
        shape = check_rectangle_shape(rect, model, seed=config.seed)
        report = verify_rectangle(model, rect, n_s=options['n_s'],
                                  n_box=options['n_box'], seed=config.seed)
        payload = {
            'rectangle': rect.to_dict(),
            'shape': shape,
            'report': report.to_dict(),
        }
        birth = model.birth
        if birth is not None and birth.exact:
            bands = band_refinement(birth, steps=1, exact=True)
            v, gap = second_iterate_gap(birth, birth.v1, birth.v2)
            below = v < birth.vstar
            payload['scalar'] = {
                'exact': birth.exact,
                'band_refinement': bands,
                'second_iterate_positive_below_vstar': bool((gap[below] > 0).all()),
                'second_iterate_negative_above_vstar': bool((gap[v > birth.vstar] < 0).all()),
            }
        return payload, report.passed
