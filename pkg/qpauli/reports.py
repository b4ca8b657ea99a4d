# qpauli/reports.py

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a report-style check: never raised, always returned."""

    name: str
    passed: bool
    max_violation: float = 0.0
    worst_entry: tuple | None = None
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "OK" if self.passed else "FAIL"
        where = f" at {self.worst_entry}" if self.worst_entry is not None else ""
        return f"[{status}] {self.name}: max violation {self.max_violation:.3e}{where}"


def combine(name: str, reports: list[CheckReport]) -> CheckReport:
    """Fold several reports into one; the worst member decides the location."""
    if not reports:
        return CheckReport(name, True)
    worst = max(reports, key=lambda r: r.max_violation)
    return CheckReport(
        name,
        all(r.passed for r in reports),
        worst.max_violation,
        worst.worst_entry,
        {r.name: r.passed for r in reports},
    )
