import sys

# Check minimal Python version
assert sys.version_info >= (3, 8), 'Minimal supported Python version is 3.8'

__version__ = '0.3.0'


class PaddyError(Exception):
    """Base class of all errors raised by the paddywatch library."""
