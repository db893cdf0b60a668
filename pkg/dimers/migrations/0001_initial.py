# Generated by Django 5.2.6 on 2026-03-02 10:14

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="Region",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("name", models.CharField(max_length=200, unique=True)),
                (
                    "lattice",
                    models.CharField(
                        choices=[
                            ("square", "Square grid"),
                            ("honeycomb", "Honeycomb"),
                            ("custom", "Custom graph"),
                        ],
                        default="square",
                        max_length=32,
                    ),
                ),
                ("version", models.PositiveSmallIntegerField(default=1)),
                ("document", models.JSONField(help_text="Versioned region document")),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "ordering": ["name"],
            },
        ),
        migrations.CreateModel(
            name="SampleRecord",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "method",
                    models.CharField(
                        choices=[("exact", "Exact sequential"), ("glauber", "Glauber face flips")],
                        default="exact",
                        max_length=16,
                    ),
                ),
                ("seed", models.BigIntegerField()),
                ("index", models.PositiveIntegerField()),
                ("matching", models.JSONField(help_text="Sorted edge indices of the cover")),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                (
                    "region",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="samples",
                        to="dimers.region",
                    ),
                ),
            ],
            options={
                "ordering": ["region", "seed", "index"],
                "constraints": [
                    models.UniqueConstraint(
                        fields=("region", "method", "seed", "index"),
                        name="unique_sample_slot",
                    )
                ],
            },
        ),
    ]
