import sys

from nilrado.cli import main

sys.exit(main())
