from waves.services.dispersion import dispersion_for

from ._base import IdewaveCommand, wave_speed


class Command(IdewaveCommand):
    help = 'Characteristic roots and the constants eta, Q and mu at a wave speed'
    name = 'roots'
    overrides = ('c',)

    def run(self, config, model, kernels, options):
        c = wave_speed(config, model, kernels)
        disp = dispersion_for(model, kernels, c)
        return {'model': model.to_dict(), 'dispersion': disp.to_dict()}, True
