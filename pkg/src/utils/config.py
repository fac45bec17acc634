import copy
import yaml
from pathlib import Path
from typing import Dict, Any, List
from functools import lru_cache

from src.config import CONFIG_FILE

_DEFAULTS: Dict[str, Any] = {
    'budgets': {
        'enumeration': 2 ** 20,
        'clique': 4096,
        'set_cover_nodes': 2 ** 20,
        'clique_nodes': 2 ** 20,
    },
    'dimensional': {
        'order_cap': 64,
        'pesin_horizon': 256,
        'bowen_max_window': 4096,
        'lambda_tol': 1e-4,
        'lambda_hi_start': 1.0,
    },
    'sequences': {
        'tail_fraction': 0.25,
        'default_n_max': 100,
    },
    'topological': {
        'epsilon_grid': [0.3, 0.15, 0.06],
    },
    'local': {
        'sample_size': 200,
        'n_max': 200,
        'epsilon_grid': [0.3, 0.15, 0.1],
        'quantile': 0.95,
    },
    'runtime': {
        'seed': 20240501,
        'workers': 4,
        'log_level': 'INFO',
    },
    'paths': {
        'output': 'results',
    },
    'cache': {
        'max_entries': 4096,
    },
}


class Config:
    _instance = None
    _config: Dict[str, Any] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(Config, cls).__new__(cls)
            cls._instance._load_config()
        return cls._instance

    @lru_cache()
    def _load_config(self):
        """Load config file with caching"""
        if not CONFIG_FILE.exists():
            self._config = copy.deepcopy(_DEFAULTS)
            return

        with open(CONFIG_FILE, 'r') as f:
            self._config = yaml.safe_load(f) or {}

    def get(self, *keys: str, default: Any = None) -> Any:
        """Get a config value using dot notation"""
        value = self._config
        for key in keys:
            if isinstance(value, dict):
                value = value.get(key)
            else:
                value = None
            if value is None:
                break
        if value is None:
            fallback = _DEFAULTS
            for key in keys:
                fallback = fallback.get(key) if isinstance(fallback, dict) else None
            return default if fallback is None else fallback
        return value

    def override(self, section: str, key: str, value: Any):
        """Set a value for the rest of the process (CLI flags)"""
        self._config.setdefault(section, {})[key] = value

    @property
    def enumeration_budget(self) -> int:
        return int(self.get('budgets', 'enumeration'))

    @property
    def clique_budget(self) -> int:
        return int(self.get('budgets', 'clique'))

    @property
    def clique_node_budget(self) -> int:
        return int(self.get('budgets', 'clique_nodes'))

    @property
    def set_cover_node_budget(self) -> int:
        return int(self.get('budgets', 'set_cover_nodes'))

    @property
    def order_cap(self) -> int:
        return int(self.get('dimensional', 'order_cap'))

    @property
    def pesin_horizon(self) -> int:
        return int(self.get('dimensional', 'pesin_horizon'))

    @property
    def bowen_max_window(self) -> int:
        return int(self.get('dimensional', 'bowen_max_window'))

    @property
    def lambda_tol(self) -> float:
        return float(self.get('dimensional', 'lambda_tol'))

    @property
    def lambda_hi_start(self) -> float:
        return float(self.get('dimensional', 'lambda_hi_start'))

    @property
    def tail_fraction(self) -> float:
        """Fraction of trailing samples used for slopes and tail extrema"""
        return float(self.get('sequences', 'tail_fraction'))

    @property
    def epsilon_grid(self) -> List[float]:
        return [float(e) for e in self.get('topological', 'epsilon_grid')]

    @property
    def local_settings(self) -> dict:
        return dict(self.get('local'))

    @property
    def seed(self) -> int:
        return int(self.get('runtime', 'seed'))

    @property
    def workers(self) -> int:
        return int(self.get('runtime', 'workers'))

    @property
    def log_level(self) -> str:
        return str(self.get('runtime', 'log_level'))

    @property
    def output_path(self) -> Path:
        """Get the directory for emitted tables"""
        return Path(self.get('paths', 'output'))
