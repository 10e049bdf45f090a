"""
Command-line entry point
Usage: python main.py {analyze,sweep,optimize,verify,fig2} [options]
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
