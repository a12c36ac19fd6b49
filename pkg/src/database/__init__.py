from src.database.base import Base
from src.database.connection import DatabaseManager
from src.database.models import SweepPoint, SweepRun

__all__ = ['Base', 'DatabaseManager', 'SweepRun', 'SweepPoint']
