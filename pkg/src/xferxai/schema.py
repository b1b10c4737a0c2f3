"""Attribute schemas and the shared/unshared partition between two of them."""

import math
from dataclasses import dataclass, field

from .errors import DataFormatError


@dataclass(frozen=True)
class Attribute:
    name: str
    unit: str = ""
    display_min: float = 0.0
    display_max: float = 1.0

    def __post_init__(self):
        if not self.name:
            raise DataFormatError("attribute name must be non-empty")
        if not (self.display_min < self.display_max):
            raise DataFormatError(
                f"attribute {self.name!r}: display_min must be < display_max"
            )
        if not (math.isfinite(self.display_min) and math.isfinite(self.display_max)):
            raise DataFormatError(f"attribute {self.name!r}: non-finite display range")

    def label(self):
        """Display name, unit appended when present: ``Weight (kg)``."""
        return f"{self.name} ({self.unit})" if self.unit else self.name


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataFormatError(f"duplicate attribute names: {dupes}")

    def __len__(self):
        return len(self.attributes)

    def __iter__(self):
        return iter(self.attributes)

    def __getitem__(self, index):
        return self.attributes[index]

    @property
    def names(self):
        return [a.name for a in self.attributes]

    def index_of(self, name):
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise KeyError(name)

    def shared_mask(self, other):
        """Boolean per attribute: True where the name also appears in ``other``.

        Membership is symmetric by construction since it is keyed on names.
        """
        other_names = set(other.names)
        return [a.name in other_names for a in self.attributes]

    def to_doc(self):
        return [
            {
                "name": a.name,
                "unit": a.unit,
                "display_min": a.display_min,
                "display_max": a.display_max,
            }
            for a in self.attributes
        ]

    @classmethod
    def from_doc(cls, doc):
        attrs = []
        for entry in doc:
            if isinstance(entry, str):
                attrs.append(Attribute(name=entry))
                continue
            try:
                attrs.append(
                    Attribute(
                        name=entry["name"],
                        unit=entry.get("unit", ""),
                        display_min=float(entry.get("display_min", 0.0)),
                        display_max=float(entry.get("display_max", 1.0)),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"bad attribute entry {entry!r}: {exc}") from exc
        return cls(tuple(attrs))


def simple_schema(names, units=None):
    """Schema with default display ranges, for tests and synthetic data."""
    units = units or [""] * len(names)
    return AttributeSchema(
        tuple(Attribute(name=n, unit=u, display_min=0.0, display_max=1.0)
              for n, u in zip(names, units))
    )
