import sys

from nucleus.cli import main

sys.exit(main())
