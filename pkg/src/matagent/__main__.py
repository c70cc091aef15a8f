import sys

from matagent.cli import main

sys.exit(main())
