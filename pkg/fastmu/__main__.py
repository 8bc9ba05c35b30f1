import sys

from fastmu.bench.cli import main

sys.exit(main())
