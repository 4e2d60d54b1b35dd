import sys

from dcc.harness.cli import main

sys.exit(main())
