from django.apps import AppConfig


class WavesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'waves'
    verbose_name = 'Traveling waves for delayed integro-difference systems'
