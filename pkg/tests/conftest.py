# Configuration file for scenario tests.
