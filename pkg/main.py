# Main entry point for the entire application.
#
# Usage: python main.py <command> [options]; see `python main.py --help`.

import sys

from interfaces.cli_app import run_cli


def main():
    """
    Prints the banner and hands the command line to the CLI.
    """
    print("--- Fractional ADMM Toolkit ---")
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
