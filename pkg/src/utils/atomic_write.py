import json
import os
import tempfile
import logging

from src.errors import ConfigurationError


def write_text_atomic(path, text):
    """Write text through a temp file in the same directory, then rename over `path`."""
    directory = os.path.dirname(os.path.abspath(path))
    tmp_path = None
    try:
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path and os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise ConfigurationError(f"Cannot write {path}: {e}") from e
    logging.info(f"Wrote {path}")
    return path


def write_json_atomic(path, data):
    """Insertion key order, UTF-8, trailing newline."""
    return write_text_atomic(path, json.dumps(data, indent=2, ensure_ascii=False) + "\n")
