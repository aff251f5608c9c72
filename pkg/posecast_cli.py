#!/usr/bin/env python3
"""
posecast - integral pose regression experiments

Launcher for running the command line from a source checkout without
installing the package. Same subcommands as the ``posecast`` console script.
"""

import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent / "src"))

from posecast.cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
