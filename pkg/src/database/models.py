from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

from .base import Base


class SweepRun(Base):
    __tablename__ = 'sweep_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    label = Column(String, nullable=True)
    baseline = Column(String, nullable=False)
    cache_fraction = Column(Float, nullable=False)
    target_margin = Column(Float, nullable=False)
    workloads = Column(Text, nullable=False)  # JSON list, report order
    seed = Column(Integer, nullable=True)
    created_at = Column(DateTime(timezone=True), server_default=func.now())

    points = relationship("SweepPoint", back_populates="run", cascade="all, delete-orphan",
                          order_by="SweepPoint.position")

    def to_dict(self):
        return {
            'id': self.id,
            'label': self.label,
            'baseline': self.baseline,
            'cache_fraction': self.cache_fraction,
            'target_margin': self.target_margin,
            'seed': self.seed,
            'points': len(self.points),
            'createdAt': self.created_at.isoformat() if self.created_at else None,
        }


class SweepPoint(Base):
    __tablename__ = 'sweep_points'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey('sweep_runs.id'), nullable=False, index=True)
    position = Column(Integer, nullable=False)  # grid order
    workload = Column(String, nullable=False)
    row_buffer = Column(Integer, nullable=False)
    t_read_ns = Column(Float, nullable=False)
    t_write_ns = Column(Float, nullable=False)
    ratio = Column(Float, nullable=False)

    run = relationship("SweepRun", back_populates="points")
