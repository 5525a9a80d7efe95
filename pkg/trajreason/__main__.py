import sys

from trajreason.harness.cli import main

sys.exit(main())
