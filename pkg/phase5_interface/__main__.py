import sys

from phase5_interface.cli import main

sys.exit(main())
