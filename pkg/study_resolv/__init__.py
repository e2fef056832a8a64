"""Top-level package for Study Resolv."""

__author__ = """Study Resolv Developers"""
__email__ = 'info@study-resolv.org'
__version__ = '0.1.0'
