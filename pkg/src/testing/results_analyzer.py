"""
Results Analyzer for verification runs
Turns saved check results into summary tables
"""

import json
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..utils import DataProcessor


class ResultsAnalyzer:
    """Analyzes saved verification results."""

    def __init__(self, results_file: Optional[str] = None, results_data: Optional[List[Dict]] = None):
        if results_file:
            with open(results_file, "r", encoding="utf-8") as f:
                self.results = json.load(f)
        elif results_data is not None:
            self.results = results_data
        else:
            raise ValueError("Either results_file or results_data must be provided")
        self.df = pd.DataFrame(self.results)
        if not self.df.empty:
            residual = pd.to_numeric(self.df["residual"], errors="coerce")
            tolerance = pd.to_numeric(self.df["tolerance"], errors="coerce")
            self.df["margin"] = residual / tolerance

    def category_table(self) -> pd.DataFrame:
        """Checks, passes and worst margin per category."""
        if self.df.empty:
            return pd.DataFrame(columns=["category", "total", "passed", "pass_rate", "worst_margin"])
        grouped = self.df.groupby("category", sort=True)
        table = pd.DataFrame({
            "total": grouped.size(),
            "passed": grouped["passed"].sum().astype(int),
            "worst_margin": grouped["margin"].max(),
        }).reset_index()
        table["pass_rate"] = table["passed"] / table["total"] * 100
        return table[["category", "total", "passed", "pass_rate", "worst_margin"]]

    def failed_table(self) -> pd.DataFrame:
        """Failed checks with their invariant and error, in run order."""
        if self.df.empty:
            return self.df
        cols = ["id", "name", "invariant", "residual", "tolerance", "detail", "error"]
        return self.df.loc[~self.df["passed"].astype(bool), cols].reset_index(drop=True)

    def margin_table(self) -> pd.DataFrame:
        """All checks sorted by residual/tolerance, worst first."""
        cols = ["name", "level", "residual", "tolerance", "margin", "execution_time"]
        return self.df[cols].sort_values("margin", ascending=False, na_position="first") \
            .reset_index(drop=True)

    def create_comparison_report(self, baseline_results: List[Dict]) -> pd.DataFrame:
        """Side-by-side margins of this run and a baseline run, by check name."""
        base = ResultsAnalyzer(results_data=baseline_results).df[["name", "passed", "margin"]]
        current = self.df[["name", "passed", "margin"]]
        merged = current.merge(base, on="name", how="outer", suffixes=("", "_baseline"))
        with np.errstate(divide="ignore", invalid="ignore"):
            merged["margin_ratio"] = merged["margin"] / merged["margin_baseline"]
        return merged

    def export_report(self, filename: str) -> str:
        DataProcessor.write_csv(self.margin_table(), filename,
                                metadata={"checks": len(self.df),
                                          "passed": int(self.df["passed"].sum())})
        return filename
