"""Trade-off curves shared by the slicing computations."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable


class Scheme(str, enum.Enum):
    H_OMA = "H-OMA"
    H_NOMA_SIC = "H-NOMA-SIC"
    H_NOMA_PUNCTURE = "H-NOMA-PUNCTURE"
    APPENDIX_A_LB = "APPENDIX-A-LB"
    APPENDIX_B_UB = "APPENDIX-B-UB"
    APPENDIX_B_LB = "APPENDIX-B-LB"


@dataclass
class RegionCurve:
    """Points (x, y) of one scheme, ascending in x, with per-point diagnostics.

    x is always the eMBB (sum) rate; y is the URLLC rate or the mMTC arrival
    rate depending on the scenario.
    """

    scheme: Scheme
    points: list[tuple[float, float]] = field(default_factory=list)
    diagnostics: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        if len(self.diagnostics) != len(self.points):
            raise ValueError("need one diagnostics entry per point")
        for x, y in self.points:
            if not (x >= 0 and y >= 0):
                raise ValueError(f"curve coordinates must be >= 0, got ({x}, {y})")
        if any(a[0] > b[0] for a, b in zip(self.points, self.points[1:])):
            raise ValueError("points must be sorted by x")

    @classmethod
    def build(cls, scheme: Scheme, rows: Iterable[tuple[float, float, dict[str, Any]]]) -> RegionCurve:
        """Sort ``(x, y, diag)`` rows by x (then y) into a curve."""
        rows = sorted(rows, key=lambda r: (r[0], r[1]))
        return cls(scheme, [(float(x), float(y)) for x, y, _ in rows], [dict(d) for _, _, d in rows])

    @property
    def xs(self) -> list[float]:
        return [p[0] for p in self.points]

    @property
    def ys(self) -> list[float]:
        return [p[1] for p in self.points]

    def __len__(self) -> int:
        return len(self.points)
