from __future__ import annotations

from django.db import models

from .constants import REGION_SCHEMA_VERSION, lattice_by_key


class Region(models.Model):
    class LatticeFamily(models.TextChoices):
        SQUARE = "square", "Square grid"
        HONEYCOMB = "honeycomb", "Honeycomb"
        CUSTOM = "custom", "Custom graph"

    name = models.CharField(max_length=200, unique=True)
    lattice = models.CharField(max_length=32, choices=LatticeFamily.choices, default=LatticeFamily.SQUARE)
    version = models.PositiveSmallIntegerField(default=REGION_SCHEMA_VERSION)
    document = models.JSONField(help_text="Versioned region document")
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["name"]

    def __str__(self) -> str:
        return self.name

    @property
    def lattice_label(self) -> str:
        family = lattice_by_key(self.lattice)
        return family.name if family else self.lattice

    def graph(self):
        from .regions import region_from_json

        return region_from_json(self.document)

    @classmethod
    def store(cls, name: str, document: dict) -> "Region":
        family = lattice_by_key(document.get("lattice")) if isinstance(document, dict) else None
        region, _ = cls.objects.update_or_create(
            name=name,
            defaults={
                "lattice": family.key if family else cls.LatticeFamily.CUSTOM,
                "version": int(document.get("version", REGION_SCHEMA_VERSION)),
                "document": document,
            },
        )
        return region


class SampleRecord(models.Model):
    class Method(models.TextChoices):
        EXACT = "exact", "Exact sequential"
        GLAUBER = "glauber", "Glauber face flips"

    region = models.ForeignKey(Region, on_delete=models.CASCADE, related_name="samples")
    method = models.CharField(max_length=16, choices=Method.choices, default=Method.EXACT)
    seed = models.BigIntegerField()
    index = models.PositiveIntegerField()
    matching = models.JSONField(help_text="Sorted edge indices of the cover")
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["region", "seed", "index"]
        constraints = [
            models.UniqueConstraint(fields=["region", "method", "seed", "index"], name="unique_sample_slot"),
        ]

    def __str__(self) -> str:
        return f"{self.region.name} #{self.index} (seed {self.seed})"
