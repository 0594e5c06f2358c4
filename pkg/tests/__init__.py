"""
Test package for lslasso.

This package contains tests for the loss families, bounds, estimator and
Monte-Carlo harness.
"""

# This file primarily marks 'tests' as a Python package
# Most test configuration is in conftest.py
