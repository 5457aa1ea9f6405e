import hashlib
import json

import numpy as np


class PfqpeError(Exception):
    pass


class ConfigError(PfqpeError, ValueError):
    """Invalid parameters or flags."""
    pass


class DimensionError(PfqpeError):
    """Requested system exceeds the dense simulation limit."""
    pass


class InfeasibleError(PfqpeError):
    """Numerically infeasible request (error split, branch ambiguity, non-PSD input)."""
    pass


class ParseError(PfqpeError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ''
        if path is not None:
            where += '{}'.format(path)
        if line is not None:
            where += ':{}'.format(line) if where else 'line {}'.format(line)
        super().__init__('{}: {}'.format(where, message) if where else message)


class ConvergenceWarning(UserWarning):
    pass


class FitQualityWarning(UserWarning):
    pass


def iter_data_lines(handle):
    """
    Yield (line number, stripped line) for every line that carries data.

    :param handle:  open text stream
    :return:  generator skipping blank lines and '#' comments
    """
    for number, line in enumerate(handle, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            # skip comment
            continue
        yield number, stripped


def make_rng(seed):
    """
    :param seed:  int, SeedSequence, Generator or None
    :return:  numpy Generator
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(root_seed, count):
    """
    Independent child streams of one root seed.  Child k is the same for
    any count > k, so results do not depend on how work is split.
    """
    root = root_seed if isinstance(root_seed, np.random.SeedSequence) \
        else np.random.SeedSequence(root_seed)
    return root.spawn(count)


def config_hash(config):
    """SHA-256 of the canonical JSON form of a resolved configuration."""
    text = json.dumps(config, sort_keys=True, default=str, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()
