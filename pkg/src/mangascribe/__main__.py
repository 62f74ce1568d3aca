import sys

from mangascribe.cli import main

sys.exit(main())
