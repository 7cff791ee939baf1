import sys

from qmts.cli import main

sys.exit(main())
