import json
from io import StringIO

import numpy as np
import pandas as pd

from pfqpe.utils import ParseError, config_hash


def _plain(value):
    """Convert numpy scalars and arrays to JSON-friendly values."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class RecordWriter():
    def __init__(self, config=None, seed=None, verbose=True):
        # resolved run configuration, stamped into every output header
        self.config = dict(config or {})
        self.seed = seed
        self.config_hash = config_hash(self.config)
        self.verbose = verbose

    def formatTerms(self, H):
        """
        Per-term rows sorted by |h| descending, for weight-distribution plots.
        @param H: PauliHamiltonian
        @return terms: list of dictionaries
        """
        order = sorted(range(len(H.terms)), key=lambda k: -abs(H.terms[k][0]))
        terms = []
        for rank, k in enumerate(order):
            h, P = H.terms[k]
            terms.append({'rank': rank, 'pauli': P.label, 'coefficient': h,
                          'weight': abs(h), 'support': P.support})
        return terms

    def formatSupportHistogram(self, H):
        counts = {}
        for _, P in H.terms:
            size = P.support
            counts[size] = counts.get(size, 0) + 1
        return [{'support': size, 'terms': counts[size]} for size in sorted(counts)]

    def formatFactorization(self, factorization):
        rows = []
        for j, eigenvalues in enumerate(factorization.eigenvalues):
            for k, value in enumerate(eigenvalues):
                rows.append({'factor': j, 'index': k, 'eigenvalue': float(value),
                             'first_eigenvalue': float(factorization.first_eigenvalues[j])})
        return rows

    def formatEstimate(self, seed_index, result, exact=None):
        """
        One row per RPE run.
        @param seed_index: index of the child seed
        @param result: RPEResult
        @param exact: reference ground energy, if known
        """
        row = {'kind': 'estimate', 'seed': seed_index, 'method': result.method,
               'estimate': result.estimate, 'r_tot': result.rotations_total, 'r_max': result.rotations_max,
               't_tot': result.time_total, 'circuits': result.circuits, 'lambda': result.lam}
        if exact is not None:
            row['exact'] = exact
            row['error'] = result.estimate - exact
        return row

    def formatRounds(self, result, seed_index=None):
        """Per-round times, sample counts, depths and measured angles."""
        return [{'kind': 'round', 'seed': seed_index, 'round': m, 't': t, 'samples': n,
                 'depth': r, 'angle': phi}
                for m, (t, n, r, phi) in enumerate(zip(result.times, result.sample_counts,
                                                       result.depths, result.angles))]

    def formatSummary(self, errors, target):
        """RMSE over the seeds against the target error."""
        errors = np.asarray(errors, dtype=float)
        return {'kind': 'summary', 'seeds': int(errors.size),
                'rmse': float(np.sqrt(np.mean(errors ** 2))), 'target': target}

    def formatCurve(self, curve):
        return [{'kind': 'curve', 'p': curve.p, 'delta': d, 'gs_err': g, 'op_err': o}
                for d, g, o in zip(curve.deltas, curve.gs_errors, curve.op_errors)]

    def formatFit(self, fit, p, quantity):
        return {'kind': 'fit', 'p': p, 'quantity': quantity, 'C': fit.constant,
                'exponent': fit.exponent, 'r2': fit.r2, 'flagged': fit.flagged}

    def formatReport(self, report):
        record = report.as_record()
        # nested values are stored as JSON text so CSV rows stay flat
        return {k: json.dumps(_plain(v)) if isinstance(v, (list, tuple, dict, np.ndarray)) else _plain(v)
                for k, v in record.items()}

    def header_lines(self):
        return ['# config {}'.format(json.dumps(self.config, sort_keys=True, default=str)),
                '# config_hash {}'.format(self.config_hash),
                '# seed {}'.format(json.dumps(self.seed))]

    def write_to_csv(self, filename, records, columns=None):
        '''
        Write records as CSV below a commented metadata header.
        :param filename: the filename to write the CSV to
        :param records: list of flat dictionaries
        '''
        frame = pd.DataFrame([{k: _plain(v) for k, v in r.items()} for r in records], columns=columns)
        with open(filename, 'w') as outfile:
            for line in self.header_lines():
                outfile.write(line + '\n')
            if len(frame.columns):
                frame.to_csv(outfile, index=False, float_format='%.17g')
        if self.verbose:
            print("Writing CSV to file {}".format(filename))

    def write_to_json(self, filename, records):
        out = {'config': self.config, 'config_hash': self.config_hash, 'seed': self.seed,
               'records': [{k: _plain(v) for k, v in r.items()} for r in records]}
        with open(filename, 'w') as outfile:
            json.dump(out, outfile, indent=2, default=str)
        if self.verbose:
            print("Writing JSON to file {}".format(filename))

    def write(self, filename, records, fmt='csv'):
        if fmt == 'json':
            self.write_to_json(filename, records)
        else:
            self.write_to_csv(filename, records)


def read_records(filename):
    """
    Read a file written by RecordWriter.

    :return:  (metadata dict with config, config_hash and seed, list of record dicts)
    """
    with open(filename) as handle:
        text = handle.read()
    if text.lstrip().startswith('{'):
        try:
            data = json.loads(text)
        except ValueError as err:
            raise ParseError("invalid JSON records: {}".format(err), None, filename)
        meta = {k: data.get(k) for k in ('config', 'config_hash', 'seed')}
        return meta, data.get('records', [])

    meta = {}
    body_start = 0
    lines = text.splitlines(keepends=True)
    for number, line in enumerate(lines):
        if not line.startswith('#'):
            body_start = number
            break
        key, _, value = line[1:].strip().partition(' ')
        try:
            meta[key] = value if key == 'config_hash' else json.loads(value)
        except ValueError:
            raise ParseError("bad header value for {}".format(key), number + 1, filename)
    else:
        body_start = len(lines)
    body = ''.join(lines[body_start:])
    if not body.strip():
        return meta, []
    frame = pd.read_csv(StringIO(body), float_precision='round_trip')
    records = [{k: (None if isinstance(v, float) and np.isnan(v) else _plain(v)) for k, v in row.items()}
               for row in frame.to_dict('records')]
    return meta, records
