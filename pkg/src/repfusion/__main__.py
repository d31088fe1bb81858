import sys

from repfusion.cli import main

sys.exit(main())
