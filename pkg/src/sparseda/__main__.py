"""Allow `python -m sparseda`."""

import sys

from .cli import main

sys.exit(main())
