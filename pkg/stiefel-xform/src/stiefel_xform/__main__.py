import sys

from stiefel_xform.cli import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
