from utils.logger import setup_logger, load_config, ensure_dir, DEFAULT_CONFIG
from utils.artifacts import config_comment, write_csv, write_json, write_jsonl

__all__ = [
    "setup_logger",
    "load_config",
    "ensure_dir",
    "DEFAULT_CONFIG",
    "config_comment",
    "write_csv",
    "write_json",
    "write_jsonl"
]
