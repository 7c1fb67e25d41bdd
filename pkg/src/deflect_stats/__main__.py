import sys

from deflect_stats.cli import main

sys.exit(main())
