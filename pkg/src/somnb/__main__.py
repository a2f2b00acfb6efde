import sys

from somnb.cli import main

sys.exit(main())
