"""
Command-line application factory.

This module creates the click command group.
"""
from .commands import create_cli
from .config import Config, CocoConfig, TestingConfig, PRESETS, Settings, load_config_file, resolve_settings

__all__ = [
    'create_cli',
    'Config',
    'CocoConfig',
    'TestingConfig',
    'PRESETS',
    'Settings',
    'load_config_file',
    'resolve_settings',
]
