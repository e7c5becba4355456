"""Record of a brute-force check that a reduction preserves its answer."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..exact import format_exact


@dataclass
class ReductionCertificate:
    """Both sides of a reduction and the outcome of every check performed.

    ``checks`` maps a check name to its boolean outcome; ``holds`` is their
    conjunction.  ``details`` carries exact values used by the checks.
    """

    source: str
    parameters: dict
    source_verdict: str
    clustering_optimum: object
    threshold: object
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(self.checks.values())

    def to_text(self) -> str:
        lines = [f"source {self.source}"]
        lines += [f"param {k} {v}" for k, v in self.parameters.items()]
        lines.append(f"source_verdict {self.source_verdict}")
        lines.append(f"clustering_optimum {format_exact(self.clustering_optimum)}")
        lines.append(f"threshold {format_exact(self.threshold) if self.threshold is not None else 'none'}")
        lines += [f"check {k} {'pass' if v else 'fail'}" for k, v in self.checks.items()]
        for k, v in self.details.items():
            lines.append(f"detail {k} {v}")
        lines.append(f"holds {str(self.holds).lower()}")
        return "\n".join(lines) + "\n"
