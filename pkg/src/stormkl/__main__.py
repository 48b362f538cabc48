import sys

from stormkl.cli import main

sys.exit(main())
