"""Ocean-state increment forecasting toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import OceanfcError, run_cli

__all__ = [name for name in dir() if not name.startswith("_")]


def main(argv=None):
    import sys

    return run_cli(list(sys.argv[1:] if argv is None else argv))
