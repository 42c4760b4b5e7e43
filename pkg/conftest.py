# Configuration file for both lib (./lib_tests) and scenario (./tests) tests.
from __future__ import annotations

# Load additional plugins
pytest_plugins = (
    'lib.microvar.plugin',
)
