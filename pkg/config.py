import os
import logging
from logging.handlers import RotatingFileHandler
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

VERSION = '0.3.1'


class Config:
    # Logging
    LOG_LEVEL = (os.environ.get('PATTERN_DUET_LOG') or 'WARNING').upper()
    LOG_FILE = os.environ.get('PATTERN_DUET_LOG_FILE')

    # Run defaults
    OUT_DIR = os.environ.get('PATTERN_DUET_OUT_DIR') or 'runs'
    SEED = int(os.environ.get('PATTERN_DUET_SEED') or 20190417)
    JOBS = int(os.environ.get('PATTERN_DUET_JOBS') or 1)

    # Spectral scans
    K_CUT = 50
    ZERO_EIG_TOL = 1e-8

    # Modal projection and attractor labels
    K_SIG = 8
    DISTINCT_TOL = 1e-4

    # Normal-form continuation
    CONT_STEP = 1e-4
    CONT_TOL = 1e-10

    # Region maps
    REGION_POINTS = 41

    # PDE integration
    GRID_N = 256
    DT = 0.1
    T_MAX = 2e4
    STEADY_TOL = 1e-9
    SNAPSHOT_STRIDE = 2000
    BLOWUP_LIMIT = 1e6


class FullConfig(Config):
    PROFILE = 'full'


class QuickConfig(Config):
    PROFILE = 'quick'
    GRID_N = 128
    DT = 0.2
    T_MAX = 5e3
    STEADY_TOL = 1e-7
    REGION_POINTS = 21


config = {
    'full': FullConfig,
    'quick': QuickConfig,
    'default': FullConfig
}


def get_config(name: Optional[str] = None):
    """Resolve a profile name (or PATTERN_DUET_PROFILE) to a Config class."""
    name = name or os.environ.get('PATTERN_DUET_PROFILE') or 'default'
    return config.get(name, config['default'])


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """Configure root logging once for CLI runs."""
    level = (level or Config.LOG_LEVEL).upper()
    log_file = log_file or Config.LOG_FILE

    handlers = [logging.StreamHandler()]
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        handlers.insert(0, RotatingFileHandler(log_file, maxBytes=10000000, backupCount=5))

    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format='%(asctime)s %(levelname)s %(name)s %(message)s',
        handlers=handlers,
        force=True
    )
