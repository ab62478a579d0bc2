import sys

from cvtnet.cli import main

sys.exit(main())
