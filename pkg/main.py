import sys

from dotenv import load_dotenv

from ui.cli import run

if __name__ == "__main__":
    load_dotenv()
    sys.exit(run(sys.argv[1:]))
