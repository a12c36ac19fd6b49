from sqlalchemy.orm import declarative_base

# Declarative base shared by all result-store tables
Base = declarative_base()
