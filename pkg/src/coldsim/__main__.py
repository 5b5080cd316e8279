import sys

from coldsim.cli import main

sys.exit(main())
