import numpy as np

from mmfield.metric import FiniteMetric, MMField, TargetSpace

R1 = TargetSpace.euclidean(1)

# filled by tests/test_acceptance.py, printed by the terminal-summary hook in conftest
ACCEPTANCE_LINES: list[str] = []


def field(d, values, measure=None, target=R1):
    m = FiniteMetric(d)
    if measure is None:
        return MMField.uniform(m, target, values)
    return MMField(m, np.asarray(measure, dtype=float), target, values)
