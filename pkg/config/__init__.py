"""Configuration package for blockspec"""
from config.settings import config

__all__ = ["config"]
