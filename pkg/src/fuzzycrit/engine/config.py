from __future__ import annotations

from dataclasses import dataclass, field

ROLE_THRESHOLD_KEYS = ("entry", "abort", "complete", "suspend", "restart")


@dataclass(frozen=True)
class EngineConfig:
    """Thresholds steering the analysis passes.

    ``role_thresholds`` overrides ``acceptance_threshold`` per condition role
    (keys from :data:`ROLE_THRESHOLD_KEYS`).
    """

    acceptance_threshold: float = 0.5
    compliance_threshold: float = 0.8
    wrong_path_margin: float = 0.1
    role_thresholds: dict = field(default_factory=dict)
    debug: bool = False

    def __post_init__(self):
        for name in ("acceptance_threshold", "compliance_threshold", "wrong_path_margin"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for key, v in self.role_thresholds.items():
            if key not in ROLE_THRESHOLD_KEYS:
                raise ValueError(f"unknown threshold role {key!r}")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"threshold for {key} must lie in [0, 1], got {v}")

    def threshold_for(self, role):
        return self.role_thresholds.get(role, self.acceptance_threshold)

    def echo(self):
        return {
            "acceptance_threshold": self.acceptance_threshold,
            "compliance_threshold": self.compliance_threshold,
            "wrong_path_margin": self.wrong_path_margin,
            "role_thresholds": dict(sorted(self.role_thresholds.items())),
        }
