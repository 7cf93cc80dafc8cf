from .config import ServiceConfig
from .engine import Engine

__all__ = ["Engine", "ServiceConfig"]
