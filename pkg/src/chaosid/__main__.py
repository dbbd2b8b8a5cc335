"""Module entry point for ``python -m chaosid``."""

import sys

from .cli import main

sys.exit(main())
