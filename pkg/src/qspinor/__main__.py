import sys

from qspinor.cli import main

sys.exit(main())
