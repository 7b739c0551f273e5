"""Entry point for ``python -m qwalk``."""

import sys

from qwalk.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
