import json
import logging
from typing import List, Optional

from src.database.connection import DatabaseManager
from src.database.models import SweepPoint, SweepRun
from src.models.design import DesignPoint, FeasibilityReport, PointResult
from src.models.errors import ConfigurationError

logger = logging.getLogger(__name__)


class ResultStore:
    """Sweep runs and their per-workload ratios in a SQLite database"""

    def __init__(self, db_path: str):
        self.db_manager = DatabaseManager(db_path)

    def save_report(self, report: FeasibilityReport, label: Optional[str] = None,
                    seed: Optional[int] = None) -> int:
        session = self.db_manager.get_session()
        try:
            run = SweepRun(
                label=label,
                baseline=report.baseline,
                cache_fraction=report.cache_fraction,
                target_margin=report.target_margin,
                workloads=json.dumps(report.workloads),
                seed=seed,
            )
            position = 0
            for result in report.results:
                for workload in report.workloads:
                    run.points.append(SweepPoint(
                        position=position,
                        workload=workload,
                        row_buffer=result.point.row_buffer_bytes,
                        t_read_ns=result.point.t_read_ns,
                        t_write_ns=result.point.t_write_ns,
                        ratio=result.ratios[workload],
                    ))
                    position += 1
            session.add(run)
            session.commit()
            logger.info(f"Stored sweep run {run.id} with {len(report.results)} points")
            return run.id
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    def load_report(self, run_id: Optional[int] = None) -> FeasibilityReport:
        """Rebuild a stored report; the latest run when run_id is None"""
        session = self.db_manager.get_session()
        try:
            query = session.query(SweepRun)
            if run_id is None:
                run = query.order_by(SweepRun.id.desc()).first()
            else:
                run = query.filter(SweepRun.id == run_id).first()
            if run is None:
                target = "any sweep run" if run_id is None else f"sweep run {run_id}"
                raise ConfigurationError(f"no {target} in {self.db_manager.db_path}", key="run_id")

            workloads = json.loads(run.workloads)
            threshold = 1.0 - run.target_margin
            results: List[PointResult] = []
            index = {}
            for row in run.points:
                key = (row.row_buffer, row.t_read_ns, row.t_write_ns)
                if key not in index:
                    index[key] = len(results)
                    results.append(PointResult(
                        point=DesignPoint(row_buffer_bytes=row.row_buffer, t_read_ns=row.t_read_ns,
                                          t_write_ns=row.t_write_ns),
                        ratios={}, feasible=True))
                results[index[key]].ratios[row.workload] = row.ratio
            for result in results:
                result.feasible = all(r >= threshold for r in result.ratios.values())

            logger.debug(f"Loaded sweep run {run.id} ({len(results)} points)")
            return FeasibilityReport(
                baseline=run.baseline,
                target_margin=run.target_margin,
                cache_fraction=run.cache_fraction,
                workloads=workloads,
                results=results,
            )
        finally:
            session.close()

    def list_runs(self) -> List[dict]:
        session = self.db_manager.get_session()
        try:
            return [run.to_dict() for run in session.query(SweepRun).order_by(SweepRun.id).all()]
        finally:
            session.close()

    def delete_run(self, run_id: int) -> bool:
        session = self.db_manager.get_session()
        try:
            run = session.query(SweepRun).filter(SweepRun.id == run_id).first()
            if run is None:
                return False
            session.delete(run)
            session.commit()
            logger.info(f"Deleted sweep run {run_id}")
            return True
        finally:
            session.close()
