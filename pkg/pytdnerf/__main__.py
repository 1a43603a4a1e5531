# coding=utf-8
import sys

from pytdnerf.cli import main

sys.exit(main())
