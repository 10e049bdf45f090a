"""
Quick Verification Runner Script
Run this to check the closed forms against the numerical routes
"""

import sys

from dotenv import load_dotenv

from src.config import load_settings
from src.testing import CheckRunner, ResultsAnalyzer


def main() -> int:
    print("🧪 Oscillator Control Verification Suite")
    print("=" * 50)
    load_dotenv()
    settings = load_settings()
    print(f"✅ Settings loaded (workers={settings.workers})")

    print("\nSelect suite:")
    print("1. Fast (analytic checks, seconds)")
    print("2. Full (adds controller search and Monte-Carlo, minutes)")
    choice = input("Enter choice (1 or 2): ").strip()
    level = "full" if choice == "2" else "fast"
    if choice not in ("1", "2"):
        print("Invalid choice. Running the fast suite by default.")

    runner = CheckRunner()
    print(f"\n🚀 Running {level} suite...")
    runner.run_level(level)
    print("\n" + runner.format_summary())

    filename = runner.save_results()
    print(f"\n💾 Results saved to: {filename}")
    print("\n📊 By category:")
    print(ResultsAnalyzer(results_file=filename).category_table().to_string(index=False))
    return 0 if runner.all_passed else 3


if __name__ == "__main__":
    sys.exit(main())
