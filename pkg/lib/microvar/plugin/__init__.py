"""
Pytest microvar plugin.

This plugin runs statistical tests against synthetic corpora with planted
spatial structure. Each test marked with ``@pytest.mark.scenario`` is
parametrized over a list of seeds so that a property is checked on several
independent corpora.

New command line options
========================

* ``--mv-log-path``: microvar logs will be printed to this file, use
  ``/dev/stdout`` if you want to print them to standard output (default: none)
* ``--mv-seeds``: number of seeds each scenario test runs with (default: 10)
* ``--mv-base-seed``: first seed, the others follow consecutively
  (default: 20170101)

  .. code-block:: console

      pytest --mv-seeds 3 --mv-log-path ./test.log

New markers
===========

* ``@pytest.mark.scenario``

  .. code-block:: python

      @pytest.mark.scenario(mark: KnownScenario | ScenarioMark, /, *, seeds=None)

New fixtures
============

* :func:`mv_logger`
* :func:`mv_seeds`
* :func:`scenario_spec`
* :func:`corpus_file`

.. raw:: html

   <hr>
"""

from __future__ import annotations

from .fixtures import corpus_file, mv_logger, mv_seeds, scenario_spec
from ..marks import ScenarioMark
from .plugin import pytest_addoption, pytest_configure

__all__ = [
    "corpus_file",
    "mv_logger",
    "mv_seeds",
    "pytest_addoption",
    "pytest_configure",
    "scenario_spec",
    "ScenarioMark",
]
