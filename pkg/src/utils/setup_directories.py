import os
import logging

from src.errors import ConfigurationError


def setup_directories(out_dir="results"):
    """Set up the output directory using absolute paths."""
    out_dir = os.path.abspath(out_dir)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise ConfigurationError(f"Cannot create output directory {out_dir}: {e}") from e
    if not os.access(out_dir, os.W_OK):
        raise ConfigurationError(f"Output directory is not writable: {out_dir}")
    logging.info(f"Ensured directory exists: {out_dir}")

    return {
        'out_dir': out_dir,
    }
