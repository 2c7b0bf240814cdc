# main.py

import sys

from cli import run
from config import logger


def main() -> None:
    try:
        code = run()
    except Exception:
        logger.exception("Fatal error")
        raise
    sys.exit(code)


if __name__ == "__main__":
    main()
