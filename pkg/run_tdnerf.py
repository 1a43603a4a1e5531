#!/usr/bin/env python3
"""
Run pytdnerf from a source checkout without installing it.

Usage:
    python run_tdnerf.py train --scene data/nerf_synthetic/lego --steps 10000 --out runs/lego
    python run_tdnerf.py budget
"""

import os
import sys

# Add pytdnerf to path if running from repo root
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from pytdnerf.cli import main

if __name__ == "__main__":
    sys.exit(main())
