from . import demo
from . import run
from . import ablate
from . import regret
from . import robustness
from . import export

__all__ = [
    'demo',
    'run',
    'ablate',
    'regret',
    'robustness',
    'export'
]
