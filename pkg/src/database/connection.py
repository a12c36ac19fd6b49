import logging
import os

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from src.database.base import Base
from src.database import models  # noqa: F401  registers the tables

logger = logging.getLogger(__name__)


class DatabaseManager:
    def __init__(self, db_path: str):
        db_path = os.path.expanduser(db_path)
        directory = os.path.dirname(db_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.db_path = db_path

        self.engine = create_engine(f'sqlite:///{db_path}')
        Base.metadata.create_all(bind=self.engine)
        logger.debug(f"Result store ready at {db_path}")

        self.SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=self.engine)

    def get_session(self):
        return self.SessionLocal()

    def dispose(self):
        self.engine.dispose()
