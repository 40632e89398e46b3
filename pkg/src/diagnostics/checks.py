#!/usr/bin/env python3
"""
Check Records
Pass/fail records produced by every report-only verification
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional


@dataclass
class CheckResult:
    """Result of one estimate check"""
    name: str
    value: float
    threshold: float
    passed: bool
    detail: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["value"] = float(self.value)
        data["threshold"] = float(self.threshold)
        data["passed"] = bool(self.passed)
        return data


def at_most(name: str, value: float, threshold: float, detail: Optional[str] = None) -> CheckResult:
    """Check that value <= threshold (NaN fails)"""
    return CheckResult(name, float(value), float(threshold), bool(value <= threshold), detail)


def at_least(
    name: str, value: float, threshold: float, detail: Optional[str] = None
) -> CheckResult:
    """Check that value >= threshold (NaN fails)"""
    return CheckResult(name, float(value), float(threshold), bool(value >= threshold), detail)


def all_passed(checks: Iterable[CheckResult]) -> bool:
    return all(check.passed for check in checks)


def failed(checks: Iterable[CheckResult]) -> List[CheckResult]:
    return [check for check in checks if not check.passed]
