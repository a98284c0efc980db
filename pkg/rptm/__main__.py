import sys
from .cli import main

# Directly dispatch to the CLI entry point.
if __name__ == "__main__":
    sys.exit(main())
