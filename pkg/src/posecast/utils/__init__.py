"""Utility package for posecast."""

from .config import load_settings, ConfigError, reject_unknown_keys, require
from .logger import setup_logger, get_logger
from .workers import ordered_map, thread_count

__all__ = [
    'load_settings',
    'ConfigError',
    'reject_unknown_keys',
    'require',
    'setup_logger',
    'get_logger',
    'ordered_map',
    'thread_count',
]
