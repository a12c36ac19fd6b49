from src.models.cache import BacksideEvent, BacksideKind, CacheConfig, CacheStats
from src.models.cost import CostTable, HierarchySpec
from src.models.design import DesignPoint, FeasibilityReport, PointResult
from src.models.device import DeviceConfig, DeviceGeometry, DeviceStats, MemoryRequest, TimingParams
from src.models.errors import ConfigurationError, ScmxError, SimulationError, TraceFormatError
from src.models.hierarchy import DirectRunStats, HierarchyStats
from src.models.locality import MissCurve
from src.models.queries import AmatQuery, HotFractionQuery
from src.models.trace import Op, SyntheticTraceSpec, Trace, TraceFormat, TraceRecord

__all__ = [
    'AmatQuery', 'BacksideEvent', 'BacksideKind', 'CacheConfig', 'CacheStats', 'ConfigurationError',
    'CostTable', 'DesignPoint', 'DeviceConfig', 'DeviceGeometry', 'DeviceStats', 'DirectRunStats',
    'FeasibilityReport', 'HierarchySpec', 'HierarchyStats', 'HotFractionQuery', 'MemoryRequest',
    'MissCurve', 'Op', 'PointResult', 'ScmxError', 'SimulationError', 'SyntheticTraceSpec',
    'TimingParams', 'Trace', 'TraceFormat', 'TraceFormatError', 'TraceRecord',
]
