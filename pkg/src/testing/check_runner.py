"""
Check Runner for the verification suite
Executes checks, records residuals and summarizes pass/fail
"""

import json
import logging
import time
import traceback
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .check_bank import CheckBank, load_fixtures

logger = logging.getLogger(__name__)


class CheckRunner:
    """Runs verification checks against a fixture set and evaluates results."""

    def __init__(self, fixtures: Optional[Dict] = None, fixtures_path: Optional[Path] = None):
        self.fixtures = fixtures if fixtures is not None else load_fixtures(fixtures_path)
        self.bank = CheckBank()
        self.results: List[Dict] = []

    def run_single_check(self, check: Dict) -> Dict:
        """Run one check; exceptions become failures with the error recorded."""
        start = time.perf_counter()
        record = {
            "id": check["id"],
            "name": check["name"],
            "invariant": check["invariant"],
            "category": check["category"],
            "level": check["level"],
            "passed": False,
            "residual": None,
            "tolerance": None,
            "detail": "",
            "error": None,
        }
        try:
            outcome = check["run"](self.fixtures)
            record.update(passed=outcome.passed, residual=outcome.residual,
                          tolerance=outcome.tolerance, detail=outcome.detail)
        except (ValueError, ArithmeticError, KeyError, np.linalg.LinAlgError) as exc:
            record["error"] = f"{type(exc).__name__}: {exc}"
            logger.debug("check %s raised\n%s", check["name"], traceback.format_exc())
        record["execution_time"] = time.perf_counter() - start
        status = "PASS" if record["passed"] else "FAIL"
        logger.info("%s %s (%.2fs)", status, check["name"], record["execution_time"])
        return record

    def run_checks(self, checks: List[Dict]) -> List[Dict]:
        self.results = [self.run_single_check(c) for c in checks]
        return self.results

    def run_level(self, level: str = "fast") -> List[Dict]:
        """Run the 'fast' analytic suite or the 'full' suite."""
        return self.run_checks(self.bank.get_checks_by_level(level))

    @property
    def all_passed(self) -> bool:
        return bool(self.results) and all(r["passed"] for r in self.results)

    def failed_checks(self) -> List[Dict]:
        return [r for r in self.results if not r["passed"]]

    def worst_residuals(self, n: int = 5) -> List[Dict]:
        """Checks closest to (or beyond) their tolerance, worst first."""
        def margin(r: Dict) -> float:
            if r["residual"] is None:
                return float("inf")
            return r["residual"] / r["tolerance"] if r["tolerance"] else float("inf")
        return sorted(self.results, key=margin, reverse=True)[:n]

    def save_results(self, filename: Optional[str] = None) -> str:
        """Save check results to a JSON file."""
        if filename is None:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filename = f"verify_results_{timestamp}.json"
        with open(filename, "w", encoding="utf-8") as f:
            json.dump(self.results, f, indent=2)
        logger.info("results saved to %s", filename)
        return filename

    def get_summary_stats(self) -> Dict:
        """Calculate summary statistics from check results."""
        if not self.results:
            return {}
        total = len(self.results)
        passed = sum(1 for r in self.results if r["passed"])
        category_stats: Dict[str, Dict] = {}
        for result in self.results:
            cat = category_stats.setdefault(result["category"], {"total": 0, "passed": 0})
            cat["total"] += 1
            cat["passed"] += int(result["passed"])
        for cat in category_stats.values():
            cat["pass_rate"] = cat["passed"] / cat["total"] * 100
        return {
            "total_checks": total,
            "passed_checks": passed,
            "failed_checks": total - passed,
            "pass_rate": passed / total * 100,
            "total_time": sum(r["execution_time"] for r in self.results),
            "category_stats": category_stats,
        }

    def format_summary(self) -> str:
        """Human summary with per-check status lines and the worst residuals."""
        lines = []
        for r in self.results:
            mark = "✅" if r["passed"] else "❌"
            if r["error"]:
                lines.append(f"{mark} {r['name']}: {r['error']}")
            else:
                lines.append(f"{mark} {r['name']}: residual {r['residual']:.3e} "
                             f"(tol {r['tolerance']:.1e}) {r['detail']}")
        for r in self.failed_checks():
            lines.append(f"   failed invariant [{r['name']}]: {r['invariant']}")
        stats = self.get_summary_stats()
        if stats:
            lines.append("=" * 60)
            lines.append(f"📊 {stats['passed_checks']}/{stats['total_checks']} checks passed "
                         f"in {stats['total_time']:.1f}s")
            lines.append("Worst residuals:")
            for r in self.worst_residuals():
                if r["residual"] is not None:
                    lines.append(f"  {r['name']:<26} {r['residual']:.3e} / {r['tolerance']:.1e}")
        return "\n".join(lines)
