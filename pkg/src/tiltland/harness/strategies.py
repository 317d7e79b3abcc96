"""Tilt-cost strategy matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

KINDS = ("pure_cooperation", "uav_tilt_only", "platform_tilt_only", "full")

LAMBDA_U = 1.0e5
LAMBDA_W = 1.0e5


@dataclass(frozen=True)
class Strategy:
    """Which tilt terms are active and how strongly.

    ``name`` is the kind of ablation; ``label`` tells apart variants of the
    same kind (for example two variance weights) and defaults to the name.
    """

    name: str
    lambda_u: float = 0.0
    lambda_w: float = 0.0
    lambda_v: float = 0.0
    label: Optional[str] = None

    def __post_init__(self):
        if self.name not in KINDS:
            raise ValueError(f"unknown strategy {self.name!r}; expected one of {', '.join(KINDS)}")
        for k in ("lambda_u", "lambda_w", "lambda_v"):
            if not getattr(self, k) >= 0.0:
                raise ValueError(f"{k} must be >= 0")
        u, w = self.lambda_u > 0.0, self.lambda_w > 0.0
        kind = {(False, False): "pure_cooperation", (True, False): "uav_tilt_only",
                (False, True): "platform_tilt_only", (True, True): "full"}[(u, w)]
        if kind != self.name:
            raise ValueError(f"weights (lambda_u={self.lambda_u:g}, lambda_w={self.lambda_w:g}) "
                             f"describe {kind!r}, not {self.name!r}")
        if self.name == "pure_cooperation" and self.lambda_v > 0.0:
            raise ValueError("pure_cooperation must have lambda_v = 0")
        if self.label is None:
            object.__setattr__(self, "label", self.name)

    def to_dict(self) -> dict:
        return {"name": self.name, "label": self.label, "lambda_u": self.lambda_u,
                "lambda_w": self.lambda_w, "lambda_v": self.lambda_v}

    @classmethod
    def from_dict(cls, d: dict) -> "Strategy":
        return cls(d["name"], float(d.get("lambda_u", 0.0)), float(d.get("lambda_w", 0.0)),
                   float(d.get("lambda_v", 0.0)), d.get("label"))


PURE_COOPERATION = Strategy("pure_cooperation")
UAV_TILT_ONLY = Strategy("uav_tilt_only", lambda_u=LAMBDA_U)
PLATFORM_TILT_ONLY = Strategy("platform_tilt_only", lambda_w=LAMBDA_W)
FULL = Strategy("full", lambda_u=LAMBDA_U, lambda_w=LAMBDA_W)

DEFAULT_STRATEGIES = {s.name: s for s in (PURE_COOPERATION, UAV_TILT_ONLY, PLATFORM_TILT_ONLY, FULL)}

# learned-field variants: strong mean weight, with and without the variance term
GP_MEAN_ONLY = Strategy("full", lambda_u=LAMBDA_U, lambda_w=1.0e6, lambda_v=0.0, label="gp_lambda_v_0")
GP_WITH_VARIANCE = Strategy("full", lambda_u=LAMBDA_U, lambda_w=1.0e6, lambda_v=1.0e2, label="gp_lambda_v_100")


def get_strategy(name: str) -> Strategy:
    """Look up a preset by name or label."""
    for s in (*DEFAULT_STRATEGIES.values(), GP_MEAN_ONLY, GP_WITH_VARIANCE):
        if name in (s.name, s.label):
            return s
    raise ValueError(f"unknown strategy {name!r}")
