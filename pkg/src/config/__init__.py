from src.config.manager import ConfigManager, configure_logging, load_workloads

__all__ = ['ConfigManager', 'configure_logging', 'load_workloads']
