from django import forms


class OverridesForm(forms.Form):
    """Numeric overrides of a run; every field is optional."""

    c = forms.FloatField(required=False, help_text="Wave speed, must exceed the minimal speed")
    h = forms.FloatField(required=False, help_text="Mesh spacing of the profile grid")
    span = forms.FloatField(required=False, help_text="Length of the profile grid")
    tol = forms.FloatField(required=False, help_text="Residual tolerance, in (0, 1)")
    max_iter = forms.IntegerField(required=False, min_value=1, max_value=1_000_000)
    n_steps = forms.IntegerField(required=False, min_value=1, max_value=1_000_000)
    eps = forms.FloatField(required=False, help_text="Rectangle or near-critical offset")
    seed = forms.IntegerField(required=False, min_value=0, max_value=2 ** 64 - 1)
    mass_tol = forms.FloatField(required=False, help_text="Dropped kernel tail mass, in (0, 1e-3)")
    cells = forms.IntegerField(required=False, min_value=64, max_value=2 ** 22)
    level = forms.FloatField(required=False, help_text="Front tracking level")
    n_histories = forms.IntegerField(required=False, min_value=1, max_value=100_000)
    s0 = forms.FloatField(required=False, help_text="Slice level of random histories, in (0, 1)")

    def _positive(self, name):
        value = self.cleaned_data.get(name)
        if value is not None and not value > 0:
            raise forms.ValidationError(f"{name} must be positive.")
        return value

    def clean_c(self):
        return self._positive('c')

    def clean_h(self):
        return self._positive('h')

    def clean_span(self):
        return self._positive('span')

    def clean_eps(self):
        return self._positive('eps')

    def clean_level(self):
        return self._positive('level')

    def clean_tol(self):
        tol = self.cleaned_data.get('tol')
        if tol is not None and not 0 < tol < 1:
            raise forms.ValidationError("tol must lie in (0, 1).")
        return tol

    def clean_mass_tol(self):
        mass_tol = self.cleaned_data.get('mass_tol')
        if mass_tol is not None and not 0 < mass_tol < 1e-3:
            raise forms.ValidationError("mass_tol must lie in (0, 1e-3).")
        return mass_tol

    def clean_s0(self):
        s0 = self.cleaned_data.get('s0')
        if s0 is not None and not 0 < s0 < 1:
            raise forms.ValidationError("s0 must lie in (0, 1).")
        return s0
