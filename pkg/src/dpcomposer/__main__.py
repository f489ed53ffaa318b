import sys

from dpcomposer.cli import main

sys.exit(main())
