"""Joint fingerprinting and decryption of 8x8 block DCT images."""

from ._jfd import *  # noqa: F401,F403
from ._jfd import JfdError, GrantMode, SchemeParams, MasterKey

__all__ = [name for name in dir() if not name.startswith("_")]
