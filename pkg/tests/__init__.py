"""
QSBA - Tests Package

This package contains automated test suites for the QSBA project.
"""
