import sys

from qrpe.cli import main

sys.exit(main())
