"""Result records shared by the bound and oracle modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class BoundResult:
    """A named capacity bound in bits.

    ``kind`` is ``"upper"`` or ``"lower"``. ``certified`` is False for
    variants kept only for comparison with reference curves; those never
    take part in sandwich assertions.
    """

    name: str
    kind: str
    value_bits: float
    params: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    certified: bool = True

    def __post_init__(self):
        if self.kind not in ("upper", "lower"):
            raise ValueError(f"kind must be 'upper' or 'lower', got {self.kind!r}")
        v = float(self.value_bits)
        if not (math.isfinite(v) and v >= 0):
            raise ValueError(f"{self.name}: bound value must be finite and >= 0, got {v}")
        object.__setattr__(self, "value_bits", v)

    def note(self):
        """Compact ``key=value`` rendering of params and diagnostics."""
        items = {**self.params, **self.diagnostics}
        parts = []
        for k in sorted(items):
            v = items[k]
            if isinstance(v, float):
                v = repr(v)
            elif isinstance(v, (list, tuple)):
                v = "/".join(repr(x) if isinstance(x, int) else repr(float(x)) for x in v)
            parts.append(f"{k}={v}")
        if not self.certified:
            parts.append("uncertified_variant")
        return ";".join(parts)


def clamp_bits(raw, diagnostics):
    """Clamp a raw bound value at zero, flagging the clamp."""
    if raw < 0 or raw != raw:
        diagnostics["clamped_from"] = float(raw)
        return 0.0
    return float(raw)


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo estimate in bits with its standard error."""

    value: float
    std_error: float
    samples: int
    seed: int
