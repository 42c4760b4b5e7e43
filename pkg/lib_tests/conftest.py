# Configuration file for lib tests.
