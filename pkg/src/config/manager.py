from typing import Any, Dict, List, Optional
import os
import json
import logging

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

from src.models.trace import SyntheticTraceSpec

logger = logging.getLogger(__name__)

LOG_LEVELS = {'error': logging.ERROR, 'info': logging.INFO, 'debug': logging.DEBUG}
WORKLOADS_FILE = os.path.join(os.path.dirname(__file__), 'workloads.json')


def configure_logging(level: str = 'info'):
    """Send log records to stderr through rich"""
    key = (level or 'info').strip().lower()
    if key not in LOG_LEVELS:
        raise ValueError(f"log level must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(
        level=LOG_LEVELS[key],
        format='%(message)s',
        datefmt='[%X]',
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def load_workloads(path: Optional[str] = None) -> Dict[str, SyntheticTraceSpec]:
    """Named synthetic workload specs, in file order"""
    path = path or WORKLOADS_FILE
    with open(path, 'r') as f:
        data = json.load(f)
    return {name: SyntheticTraceSpec(**spec) for name, spec in data.items()}


class ConfigManager:
    """Manage simulator defaults from the environment and an optional .env file"""

    def __init__(self, env_file: str = None):
        if env_file:
            self.env_file = env_file
        else:
            # Project root is two levels up from this file
            project_root = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))
            self.env_file = os.path.join(project_root, '.env')
            logger.debug(f"Looking for .env file at: {self.env_file}")

        self.config = {}
        self.load_config()

    def load_config(self):
        """Load configuration from environment and .env file"""
        if os.path.exists(self.env_file):
            logger.debug(f"Loading environment variables from {self.env_file}")
            load_dotenv(self.env_file, override=True)

        self.config['app'] = self._load_app_config()
        self.config['hierarchy'] = self._load_hierarchy_config()
        self.config['cache'] = self._load_cache_config()
        self.config['explorer'] = self._load_explorer_config()
        self.config['workloads'] = self._load_workloads()

    def _load_app_config(self) -> Dict[str, Any]:
        return {
            'log_level': os.getenv('SCMX_LOG', 'info').strip().lower(),
            'jobs': self._parse_int(os.getenv('SCMX_JOBS'), os.cpu_count() or 1),
            'results_db': self._expand_path(os.getenv('SCMX_RESULTS_DB', '~/.scmx/results.db')),
        }

    def _load_hierarchy_config(self) -> Dict[str, Any]:
        return {
            'compute_ns_per_access': self._parse_float(os.getenv('SCMX_COMPUTE_NS'), 50.0),
            'hit_service_ns': self._parse_float(os.getenv('SCMX_HIT_SERVICE_NS'), 10.0),
        }

    def _load_cache_config(self) -> Dict[str, Any]:
        return {
            'tag_lookup_ns': self._parse_float(os.getenv('SCMX_TAG_LOOKUP_NS'), 20.0),
        }

    def _load_explorer_config(self) -> Dict[str, Any]:
        return {
            'target_margin': self._parse_float(os.getenv('SCMX_TARGET_MARGIN'), 0.10),
        }

    def _load_workloads(self) -> Dict[str, Any]:
        try:
            return load_workloads()
        except (OSError, ValueError) as e:
            logger.error(f"Failed to load shipped workloads: {e}")
            return {}

    def _expand_path(self, path: str) -> str:
        """Expand user and environment variables in path"""
        if not path:
            return path
        return os.path.expandvars(os.path.expanduser(path))

    def _parse_int(self, value: Optional[str], default: int) -> Any:
        if value is None or value.strip() == '':
            return default
        try:
            return int(value)
        except ValueError:
            return value

    def _parse_float(self, value: Optional[str], default: float) -> Any:
        if value is None or value.strip() == '':
            return default
        try:
            return float(value)
        except ValueError:
            return value

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dotted key"""
        parts = key.split('.')
        value = self.config
        for part in parts:
            if isinstance(value, dict):
                value = value.get(part)
            else:
                return default
        return value if value is not None else default

    def validate(self) -> List[str]:
        """Problems with the loaded values, empty when all is well"""
        problems = []
        if self.get('app.log_level') not in LOG_LEVELS:
            problems.append(f"app.log_level: SCMX_LOG must be one of {sorted(LOG_LEVELS)}")

        jobs = self.get('app.jobs')
        if not isinstance(jobs, int) or jobs < 1:
            problems.append("app.jobs: SCMX_JOBS must be a positive integer")

        positive = {
            'hierarchy.compute_ns_per_access': 'SCMX_COMPUTE_NS',
            'hierarchy.hit_service_ns': 'SCMX_HIT_SERVICE_NS',
            'cache.tag_lookup_ns': 'SCMX_TAG_LOOKUP_NS',
        }
        for key, variable in positive.items():
            value = self.get(key)
            if not isinstance(value, float) or value < 0 or (key.endswith('per_access') and value == 0):
                problems.append(f"{key}: {variable} must be a non-negative number")

        margin = self.get('explorer.target_margin')
        if not isinstance(margin, float) or not 0 <= margin < 1:
            problems.append("explorer.target_margin: SCMX_TARGET_MARGIN must be in [0, 1)")

        if not self.get('workloads'):
            problems.append("workloads: no shipped workload specs could be loaded")
        return problems

    def create_env_file(self):
        """Create .env file with the default settings"""
        env_content = """# Logging: error, info or debug
SCMX_LOG=info

# Parallel sweep workers (defaults to the number of CPUs)
# SCMX_JOBS=8

# Sweep result database
SCMX_RESULTS_DB=~/.scmx/results.db

# Hierarchy timing defaults (ns)
SCMX_COMPUTE_NS=50
SCMX_HIT_SERVICE_NS=10
SCMX_TAG_LOOKUP_NS=20

# Feasibility margin against the DRAM baseline
SCMX_TARGET_MARGIN=0.10"""

        with open(self.env_file, 'w') as f:
            f.write(env_content)
        logger.info(f"Wrote {self.env_file}")
