"""Database manager for the run ledger (trained grid cells and metric reports)."""

import json
import uuid
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import pandas as pd
from sqlalchemy import create_engine, Column, Integer, String, DateTime, Float, Text, func
from sqlalchemy.orm import declarative_base, sessionmaker

from utils.logger import get_logger

logger = get_logger("storage")

Base = declarative_base()


class Run(Base):
    """One trained model (a grid cell or a baseline fit)."""
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_uuid = Column(String, unique=True, nullable=False, index=True)
    timestamp = Column(DateTime, nullable=False, index=True)
    model_id = Column(String, nullable=False, index=True)
    dataset = Column(String, nullable=False, index=True)
    cell_index = Column(Integer)
    val_loss = Column(Float)
    epochs = Column(Integer)
    selected = Column(Integer, default=0)
    seed = Column(Integer)
    checkpoint_path = Column(String)
    hyperparameters = Column(Text)  # Store as JSON string

    def to_dict(self):
        """Convert run to dictionary."""
        return {
            'id': self.id,
            'run_uuid': self.run_uuid,
            'timestamp': self.timestamp.isoformat() if self.timestamp else None,
            'model_id': self.model_id,
            'dataset': self.dataset,
            'cell_index': self.cell_index,
            'val_loss': self.val_loss,
            'epochs': self.epochs,
            'selected': bool(self.selected),
            'seed': self.seed,
            'checkpoint_path': self.checkpoint_path,
            'hyperparameters': json.loads(self.hyperparameters) if self.hyperparameters else None,
        }


class MetricRecord(Base):
    """One (model, dataset, metric) value."""
    __tablename__ = 'metrics'

    id = Column(Integer, primary_key=True, autoincrement=True)
    timestamp = Column(DateTime, nullable=False, index=True)
    model_id = Column(String, nullable=False, index=True)
    dataset = Column(String, nullable=False, index=True)
    metric = Column(String, nullable=False)
    value = Column(Float)

    def to_dict(self):
        return {
            'id': self.id,
            'timestamp': self.timestamp.isoformat() if self.timestamp else None,
            'model_id': self.model_id,
            'dataset': self.dataset,
            'metric': self.metric,
            'value': self.value,
        }


class DatabaseManager:
    """Manages the SQLite run ledger."""

    def __init__(self, db_path: str):
        """
        Initialize database connection.

        Args:
            db_path: Path to SQLite database file, or ':memory:'
        """
        if db_path != ":memory:":
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)

        self.engine = create_engine(f'sqlite:///{db_path}', echo=False)
        Base.metadata.create_all(self.engine)
        Session = sessionmaker(bind=self.engine)
        self.session = Session()

    def add_run(self, model_id: str, dataset: str, hyperparameters: Dict, val_loss: Optional[float] = None,
                epochs: Optional[int] = None, cell_index: Optional[int] = None, selected: bool = False,
                seed: Optional[int] = None, checkpoint_path: Optional[str] = None) -> Optional[str]:
        """
        Record a trained model.

        Returns:
            The run UUID, or None when the insert failed
        """
        try:
            run = Run(
                run_uuid=str(uuid.uuid4()),
                timestamp=datetime.now(),
                model_id=model_id,
                dataset=dataset,
                cell_index=cell_index,
                val_loss=None if val_loss is None else float(val_loss),
                epochs=epochs,
                selected=int(selected),
                seed=seed,
                checkpoint_path=checkpoint_path,
                hyperparameters=json.dumps(hyperparameters),
            )
            self.session.add(run)
            self.session.commit()
            return run.run_uuid
        except Exception as e:
            self.session.rollback()
            logger.error(f"Error adding run to database: {e}")
            return None

    def add_metrics(self, reports: Iterable) -> int:
        """
        Store every metric of the given MetricsReports.

        Returns:
            Number of rows inserted
        """
        now = datetime.now()
        rows = [
            MetricRecord(timestamp=now, model_id=rep.model, dataset=rep.dataset, metric=name, value=float(value))
            for rep in reports for name, value in rep.metrics().items()
        ]
        try:
            self.session.add_all(rows)
            self.session.commit()
            return len(rows)
        except Exception as e:
            self.session.rollback()
            logger.error(f"Error adding metrics to database: {e}")
            return 0

    def get_total_runs(self) -> int:
        return self.session.query(Run).count()

    def get_recent_runs(self, limit: int = 10) -> List[Run]:
        """
        Get most recent runs.

        Args:
            limit: Maximum number of runs to return
        """
        return self.session.query(Run).order_by(Run.timestamp.desc(), Run.id.desc()).limit(limit).all()

    def get_runs(self, model_id: Optional[str] = None, dataset: Optional[str] = None) -> List[Run]:
        query = self.session.query(Run)
        if model_id is not None:
            query = query.filter(Run.model_id == model_id)
        if dataset is not None:
            query = query.filter(Run.dataset == dataset)
        return query.order_by(Run.id.asc()).all()

    def get_best_run(self, model_id: str, dataset: str) -> Optional[Run]:
        """Run with the lowest validation loss for a model and dataset."""
        return self.session.query(Run).filter(
            Run.model_id == model_id, Run.dataset == dataset, Run.val_loss.isnot(None)
        ).order_by(Run.val_loss.asc(), Run.id.asc()).first()

    def get_metrics_frame(self, model_id: Optional[str] = None) -> pd.DataFrame:
        """Latest value of every (model, dataset, metric) in long format."""
        query = self.session.query(MetricRecord)
        if model_id is not None:
            query = query.filter(MetricRecord.model_id == model_id)
        rows = [r.to_dict() for r in query.order_by(MetricRecord.id.asc()).all()]
        frame = pd.DataFrame(rows, columns=["id", "timestamp", "model_id", "dataset", "metric", "value"])
        frame = frame.drop_duplicates(["model_id", "dataset", "metric"], keep="last")
        return frame.rename(columns={"model_id": "model"})[["model", "dataset", "metric", "value"]]

    def get_statistics_summary(self) -> dict:
        """Counts per model and the span of recorded runs."""
        per_model = dict(self.session.query(Run.model_id, func.count(Run.id)).group_by(Run.model_id).all())
        first = self.session.query(Run).order_by(Run.timestamp.asc()).first()
        last = self.session.query(Run).order_by(Run.timestamp.desc()).first()
        return {
            'total_runs': self.get_total_runs(),
            'runs_per_model': per_model,
            'datasets': sorted(d for (d,) in self.session.query(Run.dataset).distinct().all()),
            'metric_rows': self.session.query(MetricRecord).count(),
            'first_run': first.timestamp.isoformat() if first else None,
            'last_run': last.timestamp.isoformat() if last else None,
        }

    def clear_all(self):
        """Delete all runs and metrics."""
        deleted = self.session.query(Run).delete() + self.session.query(MetricRecord).delete()
        self.session.commit()
        return deleted

    def close(self):
        """Close database connection."""
        self.session.close()
