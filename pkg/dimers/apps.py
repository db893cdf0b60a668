from django.apps import AppConfig


class DimersConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "dimers"
    verbose_name = "Planar dimer models"
