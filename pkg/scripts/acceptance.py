"""Run the acceptance suite and show its PASS/FAIL lines.

    python scripts/acceptance.py
"""

import pathlib
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(pytest.main(["-q", "-s", str(ROOT / "tests" / "test_acceptance.py")]))
