import sys

from cachetrie.cli import main

sys.exit(main())
