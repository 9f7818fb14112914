from waves.services.dispersion import characteristic_curves, system_minimal_speed

from ._base import IdewaveCommand


class Command(IdewaveCommand):
    help = 'Minimal wave speed of every species and of the system'
    name = 'speed'
    overrides = ('c',)

    def run(self, config, model, kernels, options):
        cmin, speeds = system_minimal_speed(model.growth, kernels)
        payload = {
            'model': model.to_dict(),
            'kernels': [k.describe() for k in kernels],
            'cmin': cmin,
            'species': [{'cmin': s.cmin, 'lambda_star': s.lambda_star} for s in speeds],
            'lambda_star': [s.lambda_star for s in speeds],
        }
        c = config.get('c')
        if c is not None:
            curves = characteristic_curves(model.growth, kernels, c)
            payload['curves'] = curves.to_dict()
            payload['subcritical'] = c <= cmin
            payload['blocking_species'] = [
                i + 1 for i, above in enumerate(curves.above_one) if above
            ]
        return payload, True
