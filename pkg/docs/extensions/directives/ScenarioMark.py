from __future__ import annotations

import yaml
from sphinx.directives.code import CodeBlock

from lib.microvar import KnownScenario
from lib.microvar.marks import ScenarioMark


class ScenarioMarkDirective(CodeBlock):
    """
    Convert :class:`ScenarioMark` into yaml and wrap it in code-block directive.
    """

    def run(self):
        obj = eval(self.arguments[0])
        if isinstance(obj, KnownScenario):
            self.content = self.export(obj.value)
        elif isinstance(obj, ScenarioMark):
            self.content = self.export(obj)
        else:
            raise ValueError(f'Invalid argument: {self.arguments[0]}')

        # Set language
        self.arguments[0] = 'yaml'

        return super().run()

    def export(self, x: ScenarioMark) -> list[str]:
        return yaml.safe_dump(x.export(), sort_keys=False, allow_unicode=True).splitlines()


def setup(app):
    app.add_directive("scenario-mark", ScenarioMarkDirective)

    return {
        'version': '0.1',
        'parallel_read_safe': True,
        'parallel_write_safe': True,
    }
