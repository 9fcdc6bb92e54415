"""支持 python -m kinetic_spectral 启动."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
