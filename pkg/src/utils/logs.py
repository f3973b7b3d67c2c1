"""
Configuration des sinks loguru pour la CLI
"""

import os
import sys
from pathlib import Path
from typing import Optional

from loguru import logger


def setup_logging(level: Optional[str] = None, log_dir: Optional[str] = None) -> Path:
    """Installe un sink stderr et un fichier rotatif data/logs/permlim.log"""
    level = (level or os.getenv("PERMLIM_LOG_LEVEL", "INFO")).upper()
    log_dir = Path(log_dir or os.getenv("PERMLIM_LOG_DIR", "data/logs"))
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / "permlim.log"

    logger.remove()
    logger.add(sys.stderr, level=level)
    logger.add(str(log_file), rotation="10 MB", level="DEBUG")
    return log_file
